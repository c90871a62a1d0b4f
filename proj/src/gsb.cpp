#include "ousb/gsb.hpp"

#include <cmath>

namespace ousb {

Matrix omega_two_time(const KernelCache& cache, double s, double t) {
  if (s > t) throw std::domain_error("omega_two_time: requires s <= t");
  const double T = cache.horizon();
  const Matrix phi_s = cache.phi(s);
  const Matrix phi_t = cache.phi(t);
  return phi_s * cache.exp_drift(t - s).transpose() -
         phi_s * cache.exp_drift(T - s).transpose() * cache.phi_T_inverse() *
             cache.exp_drift(T - t) * phi_t;
}

TransformedMarginals transform_marginals(const OUProcess& process, const KernelCache& cache,
                                         const Gaussian& rho0, const Gaussian& rhoT) {
  const Matrix& inv_root = cache.sigmaT_inv_root();
  const Matrix flow = cache.exp_drift(cache.horizon());  // e^{TA}
  TransformedMarginals out;
  out.a_bar = inv_root * (flow * (rho0.mean - process.target) + process.target);
  out.A_bar = symmetrize(inv_root * flow * rho0.cov * flow.transpose() * inv_root);
  out.b_bar = inv_root * rhoT.mean;
  out.B_bar = symmetrize(inv_root * rhoT.cov * inv_root);
  return out;
}

Matrix entropic_cross_cov(const Matrix& A_bar, const Matrix& B_bar) {
  const Eigen::Index d = A_bar.rows();
  SymEig eig = sym_eig(A_bar);
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0) || eig.values.minCoeff() < 1e-14 * lmax)
    throw DegenerateError("entropic_cross_cov: A_bar singular");
  const Vector roots = eig.values.cwiseSqrt();
  const Matrix root = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  const Matrix inv_root = eig.vectors * roots.cwiseInverse().asDiagonal() * eig.vectors.transpose();
  const Matrix inner = symmetrize(root * B_bar * root) + 0.25 * Matrix::Identity(d, d);
  return root * sqrtm_psd(inner) * inv_root - 0.5 * Matrix::Identity(d, d);
}

double eot_gaussian_value(const Gaussian& alpha, const Gaussian& beta, double sigma2) {
  if (sigma2 < 0.0) throw std::invalid_argument("eot_gaussian_value: sigma2 must be >= 0");
  const Matrix root_a = psd_root_clamped(alpha.cov);
  const Vector vals = sym_eig(symmetrize(root_a * beta.cov * root_a)).values.cwiseMax(0.0);
  double tr_inner = 0.0, logdet = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    const double inner = std::sqrt(vals[i] + 0.25 * sigma2 * sigma2);
    tr_inner += inner;
    if (sigma2 > 0.0) logdet += std::log(inner / sigma2 + 0.5);
  }
  const double d = static_cast<double>(vals.size());
  double bures = alpha.cov.trace() + beta.cov.trace() - 2.0 * tr_inner;
  if (sigma2 > 0.0) bures += d * sigma2 + sigma2 * logdet;
  return 0.5 * (alpha.mean - beta.mean).squaredNorm() + 0.5 * bures;
}

GSBSolution::GSBSolution(const GSBProblem& problem)
    : GSBSolution(std::make_shared<KernelCache>(problem.process, problem.horizon, problem.grid_nodes),
                  problem.rho0, problem.rhoT) {}

GSBSolution::GSBSolution(std::shared_ptr<const KernelCache> cache, const Gaussian& rho0,
                         const Gaussian& rhoT)
    : cache_(std::move(cache)), rho0_(rho0), rhoT_(rhoT) {
  const int d = cache_->process().dim;
  if (rho0_.mean.size() != d || rhoT_.mean.size() != d)
    throw std::invalid_argument("GSBSolution: marginal dimension mismatch");
  if (min_eigenvalue(rho0_.cov) <= 1e-10 || min_eigenvalue(rhoT_.cov) <= 1e-10)
    throw std::invalid_argument(
        "GSBSolution: marginals must be strictly positive definite (min eigenvalue > 1e-10)");
  diff_ = cache_->process().sigma * cache_->process().sigma.transpose();
  transformed_ = transform_marginals(cache_->process(), *cache_, rho0_, rhoT_);
  cross_cov_ = entropic_cross_cov(transformed_.A_bar, transformed_.B_bar);
}

Matrix GSBSolution::gamma(double t) const {
  const double T = cache_->horizon();
  return cache_->phi(t) * cache_->exp_drift(T - t).transpose() * cache_->phi_T_inverse();
}

Matrix GSBSolution::gamma_dot(double t) const {
  const OUProcess& p = cache_->process();
  const double T = cache_->horizon();
  return (cache_->exp_drift(t) * diff_ * cache_->exp_drift(T).transpose() -
          cache_->phi(t) * p.drift.transpose() * cache_->exp_drift(T - t).transpose()) *
         cache_->phi_T_inverse();
}

Matrix GSBSolution::coef_a(double t) const {
  return (cache_->exp_drift_neg(cache_->horizon() - t) - gamma(t)) * cache_->sigmaT_root();
}

Matrix GSBSolution::coef_b(double t) const { return gamma(t) * cache_->sigmaT_root(); }

Vector GSBSolution::coef_c(double t) const {
  const OUProcess& p = cache_->process();
  return p.target - cache_->exp_drift_neg(cache_->horizon() - t) * p.target;
}

Matrix GSBSolution::coef_a_dot(double t) const {
  const OUProcess& p = cache_->process();
  return (p.drift * cache_->exp_drift_neg(cache_->horizon() - t) - gamma_dot(t)) *
         cache_->sigmaT_root();
}

Matrix GSBSolution::coef_b_dot(double t) const { return gamma_dot(t) * cache_->sigmaT_root(); }

Vector GSBSolution::coef_c_dot(double t) const {
  const OUProcess& p = cache_->process();
  return -p.drift * (cache_->exp_drift_neg(cache_->horizon() - t) * p.target);
}

Vector GSBSolution::mean(double t) const {
  return coef_a(t) * transformed_.a_bar + coef_b(t) * transformed_.b_bar + coef_c(t);
}

Vector GSBSolution::mean_dot(double t) const {
  return coef_a_dot(t) * transformed_.a_bar + coef_b_dot(t) * transformed_.b_bar + coef_c_dot(t);
}

Matrix GSBSolution::cov(double s, double t) const {
  if (s > t) throw std::domain_error("GSBSolution::cov: requires s <= t");
  const Matrix as = coef_a(s), at = coef_a(t);
  const Matrix bs = coef_b(s), bt = coef_b(t);
  return omega_two_time(*cache_, s, t) + as * transformed_.A_bar * at.transpose() +
         as * cross_cov_ * bt.transpose() + bs * cross_cov_.transpose() * at.transpose() +
         bs * transformed_.B_bar * bt.transpose();
}

Matrix GSBSolution::var(double t) const { return symmetrize(cov(t, t)); }

Matrix GSBSolution::s_matrix(double t) const {
  const OUProcess& p = cache_->process();
  const double T = cache_->horizon();
  const Matrix phi_t = cache_->phi(t);
  const Matrix e_rem = cache_->exp_drift(T - t);
  const Matrix e_t = cache_->exp_drift(t);
  const Matrix d_omega =
      phi_t * (p.drift.transpose() - e_rem.transpose() * cache_->phi_T_inverse() * e_rem *
                                         (-p.drift * phi_t + e_t * diff_ * e_t.transpose()));
  const Matrix at = coef_a(t), bt = coef_b(t);
  const Matrix at_dot = coef_a_dot(t), bt_dot = coef_b_dot(t);
  return d_omega + at * transformed_.A_bar * at_dot.transpose() +
         at * cross_cov_ * bt_dot.transpose() + bt * cross_cov_.transpose() * at_dot.transpose() +
         bt * transformed_.B_bar * bt_dot.transpose();
}

Matrix GSBSolution::drift_matrix(double t) const {
  const double tc = cache_->clamp_time(t);
  Matrix xi_inv;
  try {
    xi_inv = pd_inverse(var(tc));
  } catch (const DegenerateError&) {
    throw DegenerateError("GSBSolution::drift_matrix: Xi_t singular");
  }
  return s_matrix(tc).transpose() * xi_inv;
}

Vector GSBSolution::drift(double t, const Vector& x) const {
  const double tc = cache_->clamp_time(t);
  return mean_dot(tc) + drift_matrix(tc) * (x - mean(tc));
}

std::vector<Gaussian> GSBSolution::marginals(const std::vector<double>& times) const {
  std::vector<Gaussian> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(Gaussian{mean(t), var(t)});
  return out;
}

}  // namespace ousb
