#include "ousb/eot.hpp"

#include <algorithm>
#include <cmath>

#include "ousb/kernels.hpp"

namespace ousb {

Matrix mvou_cost(const KernelCache& cache, const Matrix& x0, const Matrix& xT) {
  const OUProcess& p = cache.process();
  if (x0.cols() != p.dim || xT.cols() != p.dim)
    throw std::invalid_argument("mvou_cost: sample dimension does not match process");
  const Matrix& whiten = cache.sigmaT_inv_root();  // throws when Sigma_T singular
  const Matrix flow = cache.exp_drift(cache.horizon());
  // mu_T^{x_i} rows, then both sides whitened.
  Matrix mu = ((x0.rowwise() - p.target.transpose()) * flow.transpose()).rowwise() +
              p.target.transpose();
  Matrix mu_w = mu * whiten.transpose();
  Matrix xT_w = xT * whiten.transpose();
  return half_sq_dist(mu_w, xT_w);
}

namespace {

void check_weights(const Vector& w, const char* name) {
  if (w.size() == 0 || w.minCoeff() <= 0.0)
    throw std::invalid_argument(std::string("sinkhorn: ") + name + " must be strictly positive");
  if (std::abs(w.sum() - 1.0) > 1e-8)
    throw std::invalid_argument(std::string("sinkhorn: ") + name + " must sum to 1");
}

}  // namespace

Coupling sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double epsilon,
                  int max_iters, double tol) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw std::invalid_argument("sinkhorn: cost shape does not match weights");
  check_weights(a, "source weights");
  check_weights(b, "target weights");

  const int64_t n = cost.rows(), m = cost.cols();
  const Matrix neg_scaled = -cost / epsilon;
  const Vector log_a = a.array().log().matrix();
  const Vector log_b = b.array().log().matrix();

  Vector u = Vector::Zero(n), v = Vector::Zero(m);
  Coupling out;
  out.epsilon = epsilon;

  auto plan_into = [&](Matrix& plan) {
    plan.resize(n, m);
    par::parallel_for(n, [&](int64_t i) {
      for (int64_t j = 0; j < m; ++j)
        plan(i, j) = std::exp(u[i] + v[j] + neg_scaled(i, j) + log_a[i] + log_b[j]);
    });
  };

  Matrix plan;
  Vector tmp;
  int iter = 0;
  double err = std::numeric_limits<double>::infinity();
  while (iter < max_iters) {
    // u_i = -LSE_j(v_j + log b_j - C_ij / eps), then the symmetric v update.
    Vector add_v = v + log_b;
    softmin_rows(neg_scaled, add_v, tmp);
    u = tmp;
    Vector add_u = u + log_a;
    softmin_cols(neg_scaled, add_u, tmp);
    v = tmp;
    ++iter;
    if (iter % 10 == 0 || iter == max_iters) {
      plan_into(plan);
      const Vector row_sums = plan.rowwise().sum();
      const Vector col_sums = plan.colwise().sum().transpose();
      err = (row_sums - a).cwiseAbs().sum() + (col_sums - b).cwiseAbs().sum();
      if (err < tol) break;
      // Recentre the potentials to keep them bounded on long runs.
      const double shift = u.mean();
      u.array() -= shift;
      v.array() += shift;
    }
  }
  plan_into(plan);
  const Vector row_sums = plan.rowwise().sum();
  const Vector col_sums = plan.colwise().sum().transpose();
  err = (row_sums - a).cwiseAbs().sum() + (col_sums - b).cwiseAbs().sum();

  out.plan = std::move(plan);
  out.f = epsilon * u;
  out.g = epsilon * v;
  out.iterations = iter;
  out.marginal_error = err;
  out.converged = err < tol;
  return out;
}

std::vector<double> coupling_cumulative(const Coupling& coupling) {
  const auto& plan = coupling.plan;
  std::vector<double> cumulative(static_cast<size_t>(plan.rows()) * plan.cols());
  double acc = 0.0;
  size_t k = 0;
  for (int64_t i = 0; i < plan.rows(); ++i)
    for (int64_t j = 0; j < plan.cols(); ++j) {
      acc += plan(i, j);
      cumulative[k++] = acc;
    }
  if (!(acc > 0.0)) throw std::invalid_argument("sample_coupling: plan has zero total mass");
  for (auto& c : cumulative) c /= acc;
  cumulative.back() = 1.0;
  return cumulative;
}

std::pair<int, int> sample_coupling_cell(const std::vector<double>& cumulative, int cols, Rng& rng) {
  const double ticket = rng.uniform();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), ticket);
  const size_t cell = std::min(static_cast<size_t>(it - cumulative.begin()), cumulative.size() - 1);
  return {static_cast<int>(cell / cols), static_cast<int>(cell % cols)};
}

std::vector<std::pair<int, int>> sample_coupling(const Coupling& coupling, int batch, Rng& rng) {
  const auto cumulative = coupling_cumulative(coupling);
  const int cols = static_cast<int>(coupling.plan.cols());
  std::vector<std::pair<int, int>> out(batch);
  for (int k = 0; k < batch; ++k) out[k] = sample_coupling_cell(cumulative, cols, rng);
  return out;
}

std::vector<std::pair<int, int>> sample_coupling(const Coupling& coupling, int batch, uint64_t seed) {
  Rng rng(seed);
  return sample_coupling(coupling, batch, rng);
}

}  // namespace ousb
