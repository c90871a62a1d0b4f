#include "ousb/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace ousb {

MarginalEval evaluate_against_gsb(const Checkpoint& checkpoint, const GSBSolution& truth,
                                  int eval_samples, int em_steps, int n_eval_times, uint64_t seed) {
  const double t0 = checkpoint.t_begin, t1 = checkpoint.t_end;
  Rng rng = Rng::derive(seed, 7001);
  const Matrix x0s = sample_gaussian(truth.marginals({t0})[0], eval_samples, rng);

  const std::vector<double> grid = uniform_grid(t0, t1, em_steps);
  std::vector<int> record;
  std::vector<double> eval_times;
  for (int k = 0; k < n_eval_times; ++k) {
    const double frac = n_eval_times == 1 ? 0.0 : static_cast<double>(k) / (n_eval_times - 1);
    const int idx = static_cast<int>(std::lround(frac * em_steps));
    record.push_back(idx);
    eval_times.push_back(grid[idx]);
  }

  DriftField drift = [&checkpoint](double t, const Vector& x) {
    return sb_drift(checkpoint, t, x);
  };
  const auto marginals =
      em_ensemble(drift, checkpoint.process.sigma, x0s, grid, record, Rng::derive(seed, 7002).next_u64());

  MarginalEval out;
  double acc = 0.0;
  for (size_t k = 0; k < eval_times.size(); ++k) {
    const Gaussian fitted = fit_gaussian(marginals[k]);
    const Gaussian exact = Gaussian{truth.mean(eval_times[k]), truth.var(eval_times[k])};
    acc += bw2(fitted, exact);
  }
  out.bw2_mean = acc / static_cast<double>(eval_times.size());

  std::vector<double> force_times;
  for (int k = 1; k <= 9; ++k) force_times.push_back(t0 + (t1 - t0) * k / 10.0);
  const MetricReport force =
      force_error([&checkpoint](double t, const Vector& x) { return sb_drift(checkpoint, t, x); },
                  [&truth](double t, const Vector& x) { return truth.drift(t, x); },
                  [&truth](double t) { return Gaussian{truth.mean(t), truth.var(t)}; },
                  force_times, 1024, Rng::derive(seed, 7003).next_u64());
  out.force_error = force.value;
  return out;
}

GaussianBenchmarkResult run_gaussian_benchmark(int d, const std::vector<uint64_t>& seeds,
                                               TrainConfig config, int eval_samples, int em_steps,
                                               int n_eval_times) {
  GaussianBenchmarkResult result;
  for (uint64_t seed : seeds) {
    const GaussianBenchmark bench = gaussian_benchmark(d, seed);
    GSBProblem problem{bench.process, bench.rho0, bench.rho1, 1.0, config.cache_grid};
    GSBSolution truth(problem);

    const std::vector<Snapshot> data = {{0.0, bench.samples0}, {1.0, bench.samples1}};
    TrainConfig run_config = config;
    run_config.seed = seed;

    const Checkpoint mvou = train(data, bench.process, run_config);
    const OUProcess brownian = OUProcess::create(
        Matrix::Zero(d, d), Vector::Zero(d), Matrix::Identity(d, d));
    const Checkpoint bm = train(data, brownian, run_config);

    GaussianBenchmarkRun run;
    run.seed = seed;
    const MarginalEval mvou_eval =
        evaluate_against_gsb(mvou, truth, eval_samples, em_steps, n_eval_times, seed);
    const MarginalEval bm_eval =
        evaluate_against_gsb(bm, truth, eval_samples, em_steps, n_eval_times, seed);
    run.mvou_bw2 = mvou_eval.bw2_mean;
    run.mvou_force = mvou_eval.force_error;
    run.bm_bw2 = bm_eval.bw2_mean;
    run.bm_force = bm_eval.force_error;
    result.runs.push_back(run);
    result.mvou_bw2_mean += run.mvou_bw2;
    result.bm_bw2_mean += run.bm_bw2;
    result.mvou_force_mean += run.mvou_force;
    result.bm_force_mean += run.bm_force;
  }
  const double n = static_cast<double>(seeds.size());
  result.mvou_bw2_mean /= n;
  result.bm_bw2_mean /= n;
  result.mvou_force_mean /= n;
  result.bm_force_mean /= n;
  return result;
}

std::vector<Snapshot> make_repressilator_snapshots(uint64_t seed, int n_per_snapshot,
                                                   int n_snapshots, double t_end) {
  std::vector<double> times(n_snapshots);
  for (int k = 0; k < n_snapshots; ++k)
    times[k] = t_end * static_cast<double>(k) / (n_snapshots - 1);
  const auto mats = repressilator_snapshots(RepressilatorParams{}, n_per_snapshot, times, seed);
  std::vector<Snapshot> snapshots(n_snapshots);
  for (int k = 0; k < n_snapshots; ++k) snapshots[k] = Snapshot{times[k], mats[k]};
  return snapshots;
}

Matrix repressilator_jacobian(const RepressilatorParams& p) {
  // Symmetric fixed point: beta / (1 + (x/k)^n) = gamma x, solved by bisection.
  auto residual = [&](double x) {
    return p.beta / (1.0 + std::pow(x / p.k, p.hill)) - p.gamma * x;
  };
  double lo = 0.0, hi = p.beta / p.gamma;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double hill_term = std::pow(x / p.k, p.hill);
  const double dh = -p.beta * p.hill * hill_term / (x * (1.0 + hill_term) * (1.0 + hill_term));
  Matrix j = -p.gamma * Matrix::Identity(3, 3);
  j(0, 2) = dh;
  j(1, 0) = dh;
  j(2, 1) = dh;
  return j;
}

bool repressilator_sign_pattern(const Matrix& fitted_drift) {
  return fitted_drift(0, 2) < 0.0 && fitted_drift(1, 0) < 0.0 && fitted_drift(2, 1) < 0.0;
}

RepressilatorLooResult run_repressilator_loo(const std::vector<uint64_t>& seeds,
                                             TrainConfig config, int outer_iters,
                                             int n_per_snapshot, int n_snapshots) {
  RepressilatorLooResult out;
  out.energy_by_iterate.assign(outer_iters, 0.0);
  out.emd_by_iterate.assign(outer_iters, 0.0);
  const OUProcess initial = OUProcess::create(Matrix::Zero(3, 3), Vector::Zero(3),
                                              0.1 * Matrix::Identity(3, 3));
  int count = 0;
  bool signs_ok = true;
  for (uint64_t seed : seeds) {
    const auto snapshots = make_repressilator_snapshots(seed, n_per_snapshot, n_snapshots);
    TrainConfig run_config = config;
    run_config.seed = seed;
    for (int held = 1; held + 1 < n_snapshots; ++held) {
      const auto loo = leave_one_out(snapshots, held, initial, outer_iters, run_config);
      for (int k = 0; k < outer_iters; ++k) {
        out.energy_by_iterate[k] += loo.energy[k];
        out.emd_by_iterate[k] += loo.emd[k];
      }
      ++count;
    }
    const RefitState full = iterated_refit(snapshots, initial, outer_iters, run_config);
    out.fitted_drift = full.final_process.drift;
    signs_ok = signs_ok && repressilator_sign_pattern(out.fitted_drift);
  }
  for (int k = 0; k < outer_iters; ++k) {
    out.energy_by_iterate[k] /= count;
    out.emd_by_iterate[k] /= count;
  }
  out.sign_pattern_ok = signs_ok;
  return out;
}

PlantedRecoveryResult run_planted_recovery(const std::vector<uint64_t>& seeds, TrainConfig config,
                                           int outer_iters, int n_per_snapshot) {
  PlantedRecoveryResult out;
  Matrix a_true(2, 2);
  a_true << 0.0, 1.2, -1.2, 0.0;
  Vector m_true(2);
  m_true << 0.5, -0.5;
  const Matrix sigma = 0.4 * Matrix::Identity(2, 2);
  out.truth = OUProcess::create(a_true, m_true, sigma);
  const OUProcess initial =
      OUProcess::create(Matrix::Zero(2, 2), Vector::Zero(2), sigma);
  // Late refit rounds produce sharp couplings; give Sinkhorn room.
  config.sinkhorn_max_iters = std::max(config.sinkhorn_max_iters, 200000);
  config.sinkhorn_tol = std::max(config.sinkhorn_tol, 1e-7);

  const int n_snapshots = 9;
  const double t_end = 2.4;
  std::vector<double> times(n_snapshots);
  for (int k = 0; k < n_snapshots; ++k)
    times[k] = t_end * static_cast<double>(k) / (n_snapshots - 1);

  DriftField drift = [&](double, const Vector& x) { return a_true * (x - m_true); };
  for (uint64_t seed : seeds) {
    // Independent trajectories per snapshot, Euler-Maruyama at dt = 1e-3.
    Rng ic_rng = Rng::derive(seed, 11);
    std::vector<Snapshot> snapshots(n_snapshots);
    for (int s = 0; s < n_snapshots; ++s) {
      Matrix x0s(n_per_snapshot, 2);
      for (int i = 0; i < n_per_snapshot; ++i) {
        Vector x(2);
        x << 2.0 + 0.5 * ic_rng.normal(), 0.5 * ic_rng.normal();
        x0s.row(i) = x.transpose();
      }
      if (times[s] == 0.0) {
        snapshots[s] = Snapshot{times[s], x0s};
        continue;
      }
      const int steps = std::max(1, static_cast<int>(std::lround(times[s] / 1e-3)));
      const auto grid = uniform_grid(0.0, times[s], steps);
      const auto recs = em_ensemble(drift, sigma, x0s, grid, {steps},
                                    Rng::derive(seed, 100 + s).next_u64());
      snapshots[s] = Snapshot{times[s], recs[0]};
    }
    TrainConfig run_config = config;
    run_config.seed = seed;
    const RefitState state = iterated_refit(snapshots, initial, outer_iters, run_config);
    const double rel =
        (state.final_process.drift - a_true).norm() / a_true.norm();
    out.rel_errors.push_back(rel);
  }
  std::vector<double> sorted = out.rel_errors;
  std::sort(sorted.begin(), sorted.end());
  out.median = sorted[sorted.size() / 2];
  return out;
}

}  // namespace ousb
