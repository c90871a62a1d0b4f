#include "ousb/refit.hpp"

#include <algorithm>
#include <cmath>

#include "ousb/metrics.hpp"
#include "ousb/sim.hpp"

namespace ousb {

namespace {

// Centered ridge solve: B = (Xc^T Xc + lambda I)^{-1} Xc^T Vc (transposed),
// c = v_mean - B x_mean.
std::pair<Matrix, Vector> ridge_solve(const Matrix& x, const Matrix& v, double lambda) {
  const Eigen::Index d = x.cols();
  const Vector x_mean = x.colwise().mean().transpose();
  const Vector v_mean = v.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Matrix vc = v.rowwise() - v_mean.transpose();
  const Matrix gram = xc.transpose() * xc + lambda * Matrix::Identity(d, d);
  const Matrix bt = gram.ldlt().solve(xc.transpose() * vc);  // d x d, B^T
  const Matrix b = bt.transpose();
  const Vector c = v_mean - b * x_mean;
  return {b, c};
}

double prediction_mse(const Matrix& x, const Matrix& v, const Matrix& b, const Vector& c) {
  const Matrix pred = (x * b.transpose()).rowwise() + c.transpose();
  return (pred - v).squaredNorm() / static_cast<double>(v.rows());
}

}  // namespace

RidgeFit ridge_fit(const Matrix& states, const Matrix& drifts,
                   const std::vector<double>& lambda_grid, const Vector& prev_target, int folds) {
  const Eigen::Index n = states.rows();
  const Eigen::Index d = states.cols();
  if (drifts.rows() != n || drifts.cols() != d)
    throw std::invalid_argument("ridge_fit: states and drifts must have matching shape");
  if (n < d + 1) throw std::invalid_argument("ridge_fit: need at least d+1 samples");

  std::vector<double> grid;
  for (double l : lambda_grid)
    if (l > 0.0) grid.push_back(l);
  if (grid.empty()) throw std::invalid_argument("ridge_fit: lambda grid has no positive entries");

  folds = std::min<int>(folds, static_cast<int>(n));
  double best_lambda = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double mse_acc = 0.0;
    int used = 0;
    for (int f = 0; f < folds; ++f) {
      // Strided folds: deterministic, no shuffling state.
      std::vector<Eigen::Index> hold, keep;
      for (Eigen::Index i = 0; i < n; ++i) (i % folds == f ? hold : keep).push_back(i);
      if (hold.empty() || static_cast<Eigen::Index>(keep.size()) < d + 1) continue;
      Matrix x_train(keep.size(), d), v_train(keep.size(), d);
      for (size_t i = 0; i < keep.size(); ++i) {
        x_train.row(i) = states.row(keep[i]);
        v_train.row(i) = drifts.row(keep[i]);
      }
      Matrix x_hold(hold.size(), d), v_hold(hold.size(), d);
      for (size_t i = 0; i < hold.size(); ++i) {
        x_hold.row(i) = states.row(hold[i]);
        v_hold.row(i) = drifts.row(hold[i]);
      }
      auto [b, c] = ridge_solve(x_train, v_train, lambda);
      mse_acc += prediction_mse(x_hold, v_hold, b, c);
      ++used;
    }
    const double mse = used > 0 ? mse_acc / used : std::numeric_limits<double>::infinity();
    if (mse < best_mse) {
      best_mse = mse;
      best_lambda = lambda;
    }
  }

  auto [b, c] = ridge_solve(states, drifts, best_lambda);
  RidgeFit fit;
  fit.drift = b;
  fit.lambda = best_lambda;
  fit.cv_mse = best_mse;
  fit.residual = prediction_mse(states, drifts, b, c);

  Eigen::JacobiSVD<Matrix> svd(b);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  fit.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (std::isfinite(fit.condition) && fit.condition < 1e8) {
    fit.target = -b.partialPivLu().solve(c);
    fit.target_updated = true;
  } else {
    // m is unidentifiable when A is near zero; keep the previous value.
    fit.target = prev_target;
    fit.target_updated = false;
  }
  return fit;
}

RefitState iterated_refit(const std::vector<Snapshot>& snapshots, const OUProcess& initial,
                          int outer_iters, const TrainConfig& config,
                          const std::vector<double>& lambda_grid) {
  if (snapshots.size() < 3)
    throw std::invalid_argument("iterated_refit: need at least 3 snapshots");
  if (outer_iters < 1) throw std::invalid_argument("iterated_refit: outer_iters must be >= 1");

  Eigen::Index total_rows = 0;
  for (const auto& s : snapshots) total_rows += s.samples.rows();
  const int d = initial.dim;

  RefitState state;
  state.final_process = initial;
  OUProcess current = initial;
  for (int k = 0; k < outer_iters; ++k) {
    RefitIteration round;
    round.process = current;
    try {
      round.checkpoint = train(snapshots, current, config);
    } catch (const DegenerateError& e) {
      throw DegenerateError("iterated_refit: training failed at iteration " + std::to_string(k) +
                            ": " + e.what());
    }

    // Drift evaluations at every snapshot sample point at its snapshot time.
    Matrix states(total_rows, d), drifts(total_rows, d);
    Eigen::Index row = 0;
    for (const auto& s : snapshots) {
      const Matrix v = sb_drift_batch(round.checkpoint, s.time, s.samples);
      states.middleRows(row, s.samples.rows()) = s.samples;
      drifts.middleRows(row, s.samples.rows()) = v;
      row += s.samples.rows();
    }
    round.fit = ridge_fit(states, drifts, lambda_grid, current.target);
    current = OUProcess::create(round.fit.drift, round.fit.target, current.sigma);
    state.iterations.push_back(std::move(round));
  }
  state.final_process = current;
  return state;
}

LeaveOneOutResult leave_one_out(const std::vector<Snapshot>& snapshots, int held_out,
                                const OUProcess& initial, int outer_iters,
                                const TrainConfig& config, int em_steps) {
  const int n = static_cast<int>(snapshots.size());
  if (held_out <= 0 || held_out >= n - 1)
    throw std::invalid_argument("leave_one_out: only interior snapshots can be held out");

  std::vector<Snapshot> kept;
  for (int i = 0; i < n; ++i)
    if (i != held_out) kept.push_back(snapshots[i]);

  RefitState state = iterated_refit(kept, initial, outer_iters, config);

  const Snapshot& source = snapshots[held_out - 1];
  const Snapshot& truth = snapshots[held_out];
  const std::vector<double> grid = uniform_grid(source.time, truth.time, em_steps);
  const std::vector<int> record = {em_steps};

  LeaveOneOutResult out;
  out.held_out = held_out;
  for (size_t k = 0; k < state.iterations.size(); ++k) {
    const Checkpoint& ckpt = state.iterations[k].checkpoint;
    DriftField drift = [&ckpt](double t, const Vector& x) { return sb_drift(ckpt, t, x); };
    const auto recs = em_ensemble(drift, ckpt.process.sigma, source.samples, grid, record,
                                  Rng::derive(config.seed, 1000 + k).next_u64());
    const Matrix& predicted = recs[0];
    out.emd.push_back(emd(predicted, truth.samples));
    out.energy.push_back(energy_distance(predicted, truth.samples));
    if (k + 1 == state.iterations.size()) out.predicted = predicted;
  }
  return out;
}

}  // namespace ousb
