#include "ousb/kernel_cache.hpp"

#include <cmath>

namespace ousb {

namespace {

// Composite Simpson on [0, delta] of E(u) W E(u)^T where E chains by
// multiplication with e^{(delta/8) G}; 4 panels are plenty below a grid step.
Matrix local_simpson(const Matrix& generator, const Matrix& weight, double delta) {
  const Eigen::Index d = weight.rows();
  if (delta <= 0.0) return Matrix::Zero(d, d);
  const Matrix ehalf = expm(generator * (delta / 8.0));
  Matrix e = Matrix::Identity(d, d);
  std::vector<Matrix> f(9);
  f[0] = weight;
  for (int j = 1; j <= 8; ++j) {
    e = e * ehalf;
    f[j] = e * weight * e.transpose();
  }
  Matrix acc = Matrix::Zero(d, d);
  for (int p = 0; p < 4; ++p) acc += f[2 * p] + 4.0 * f[2 * p + 1] + f[2 * p + 2];
  return (delta / 24.0) * acc;
}

}  // namespace

KernelCache::KernelCache(const OUProcess& process, double horizon, int grid_nodes)
    : process_(process), horizon_(horizon), panels_(grid_nodes) {
  if (!(horizon > 0.0)) throw std::invalid_argument("KernelCache: horizon must be positive");
  if (grid_nodes < 2) throw std::invalid_argument("KernelCache: need at least 2 grid panels");
  const int d = process_.dim;
  step_ = horizon_ / panels_;
  diff_ = process_.sigma * process_.sigma.transpose();

  const Matrix id = Matrix::Identity(d, d);
  const Matrix ehalf = expm(process_.drift * (step_ / 2.0));
  const Matrix ehalf_neg = expm(-process_.drift * (step_ / 2.0));

  exp_a_.resize(panels_ + 1);
  exp_a_neg_.resize(panels_ + 1);
  phi_.resize(panels_ + 1);
  lam_l_.resize(panels_ + 1);
  exp_a_[0] = id;
  exp_a_neg_[0] = id;
  phi_[0] = Matrix::Zero(d, d);
  lam_l_[0] = Matrix::Zero(d, d);

  Matrix f_lo = diff_;   // e^{uA} S e^{uA^T} at the panel start
  Matrix g_lo = id;      // e^{-uA} e^{-uA^T} at the panel start
  for (int k = 0; k < panels_; ++k) {
    const Matrix e_mid = exp_a_[k] * ehalf;
    exp_a_[k + 1] = e_mid * ehalf;
    const Matrix en_mid = exp_a_neg_[k] * ehalf_neg;
    exp_a_neg_[k + 1] = en_mid * ehalf_neg;

    const Matrix f_mid = e_mid * diff_ * e_mid.transpose();
    const Matrix f_hi = exp_a_[k + 1] * diff_ * exp_a_[k + 1].transpose();
    phi_[k + 1] = symmetrize(phi_[k] + (step_ / 6.0) * (f_lo + 4.0 * f_mid + f_hi));
    f_lo = f_hi;

    const Matrix g_mid = en_mid * en_mid.transpose();
    const Matrix g_hi = exp_a_neg_[k + 1] * exp_a_neg_[k + 1].transpose();
    lam_l_[k + 1] = symmetrize(lam_l_[k] + (step_ / 6.0) * (g_lo + 4.0 * g_mid + g_hi));
    g_lo = g_hi;
  }

  SymEig eig = sym_eig(phi_.back());
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0) || eig.values.minCoeff() < 1e-12 * lmax) {
    degenerate_ = true;
  } else {
    const Vector roots = eig.values.cwiseSqrt();
    sigmaT_root_ = symmetrize(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
    sigmaT_inv_root_ =
        symmetrize(eig.vectors * roots.cwiseInverse().asDiagonal() * eig.vectors.transpose());
    phi_T_inv_ =
        symmetrize(eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose());
  }
}

double KernelCache::checked_time(double t, const char* what) const {
  const double fuzz = 1e-12 * std::max(1.0, horizon_);
  if (t < -fuzz || t > horizon_ + fuzz)
    throw std::domain_error(std::string(what) + ": time outside [0, T]");
  return std::min(std::max(t, 0.0), horizon_);
}

Matrix KernelCache::exp_drift(double t) const {
  t = checked_time(t, "exp_drift");
  int k = std::min(static_cast<int>(t / step_), panels_);
  const double delta = t - grid_time(k);
  if (delta <= 1e-15 * std::max(1.0, horizon_)) return exp_a_[k];
  return exp_a_[k] * expm(process_.drift * delta);
}

Matrix KernelCache::exp_drift_neg(double t) const {
  t = checked_time(t, "exp_drift_neg");
  int k = std::min(static_cast<int>(t / step_), panels_);
  const double delta = t - grid_time(k);
  if (delta <= 1e-15 * std::max(1.0, horizon_)) return exp_a_neg_[k];
  return exp_a_neg_[k] * expm(-process_.drift * delta);
}

Matrix KernelCache::phi(double t) const {
  t = checked_time(t, "phi");
  int k = std::min(static_cast<int>(t / step_), panels_);
  const double delta = t - grid_time(k);
  if (delta <= 1e-15 * std::max(1.0, horizon_)) return phi_[k];
  // Phi_t = Phi_delta + e^{delta A} Phi_{t_k} e^{delta A^T}
  const Matrix tail = local_simpson(process_.drift, diff_, delta);
  const Matrix e = expm(process_.drift * delta);
  return symmetrize(tail + e * phi_[k] * e.transpose());
}

Matrix KernelCache::lam(double t) const {
  t = checked_time(t, "lam");
  const double tau = horizon_ - t;
  int k = std::min(static_cast<int>(tau / step_), panels_);
  const double delta = tau - grid_time(k);
  if (delta <= 1e-15 * std::max(1.0, horizon_)) return lam_l_[k];
  // L(tau) = L(tau_k) + e^{-tau_k A} L_local(delta) e^{-tau_k A^T}
  const Matrix id = Matrix::Identity(process_.dim, process_.dim);
  const Matrix tail = local_simpson(-process_.drift, id, delta);
  return symmetrize(lam_l_[k] + exp_a_neg_[k] * tail * exp_a_neg_[k].transpose());
}

Matrix KernelCache::lam_node(int k) const { return lam_l_[panels_ - k]; }

const Matrix& KernelCache::sigmaT_root() const {
  if (degenerate_) throw DegenerateError("KernelCache: Phi_T numerically singular");
  return sigmaT_root_;
}

const Matrix& KernelCache::sigmaT_inv_root() const {
  if (degenerate_) throw DegenerateError("KernelCache: Phi_T numerically singular");
  return sigmaT_inv_root_;
}

const Matrix& KernelCache::phi_T_inverse() const {
  if (degenerate_) throw DegenerateError("KernelCache: Phi_T numerically singular");
  return phi_T_inv_;
}

double KernelCache::clamp_time(double t) const {
  const double eps = 1e-4 * horizon_;
  return std::min(std::max(t, eps), horizon_ - eps);
}

Gaussian unconditional_moments(const OUProcess& process, const KernelCache& cache,
                               const Vector& x0, double t) {
  Vector mean = cache.exp_drift(t) * (x0 - process.target) + process.target;
  return Gaussian{mean, cache.phi(t)};
}

}  // namespace ousb
