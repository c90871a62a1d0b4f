#pragma once

#include <memory>
#include <vector>

#include "ousb/bridge.hpp"

namespace ousb {

// Endpoint-independent two-time covariance kernel of the pinned process,
// Omega_{s,t} for s <= t (diagonal gives Omega_t).
Matrix omega_two_time(const KernelCache& cache, double s, double t);

struct GSBProblem {
  OUProcess process;
  Gaussian rho0;  // N(a, A)
  Gaussian rhoT;  // N(b, B)
  double horizon = 1.0;
  int grid_nodes = 512;
};

struct TransformedMarginals {
  Vector a_bar;
  Matrix A_bar;
  Vector b_bar;
  Matrix B_bar;
};

// Marginals pushed through Sigma_T^{-1/2} and the flow map.
TransformedMarginals transform_marginals(const OUProcess& process, const KernelCache& cache,
                                         const Gaussian& rho0, const Gaussian& rhoT);

// Cross-covariance of the unit-diffusivity Gaussian entropic transport plan:
// C = A^{1/2} (A^{1/2} B A^{1/2} + I/4)^{1/2} A^{-1/2} - I/2.
Matrix entropic_cross_cov(const Matrix& A_bar, const Matrix& B_bar);

// Entropic OT value between Gaussians at regularisation sigma2 >= 0; at
// sigma2 = 0 this is half the squared Bures-Wasserstein functional plus the
// squared mean distance (log-det term dropped).
double eot_gaussian_value(const Gaussian& alpha, const Gaussian& beta, double sigma2);

// Closed-form Gaussian Schroedinger bridge with mvOU reference. Immutable
// after construction; evaluation is pure and concurrently callable.
class GSBSolution {
 public:
  explicit GSBSolution(const GSBProblem& problem);
  GSBSolution(std::shared_ptr<const KernelCache> cache, const Gaussian& rho0, const Gaussian& rhoT);

  const KernelCache& cache() const { return *cache_; }
  double horizon() const { return cache_->horizon(); }
  const TransformedMarginals& transformed() const { return transformed_; }
  const Matrix& cross_cov() const { return cross_cov_; }

  Matrix coef_a(double t) const;      // fraktur A_t
  Matrix coef_b(double t) const;      // fraktur B_t
  Vector coef_c(double t) const;      // fraktur c_t
  Matrix coef_a_dot(double t) const;
  Matrix coef_b_dot(double t) const;
  Vector coef_c_dot(double t) const;

  Vector mean(double t) const;              // nu_t
  Vector mean_dot(double t) const;          // d/dt nu_t
  Matrix cov(double s, double t) const;     // Xi_{s,t}, s <= t
  Matrix var(double t) const;               // Xi_{t,t}
  Matrix drift_matrix(double t) const;      // S_t^T Xi_t^{-1}
  Vector drift(double t, const Vector& x) const;

  std::vector<Gaussian> marginals(const std::vector<double>& times) const;

 private:
  Matrix gamma(double t) const;
  Matrix gamma_dot(double t) const;
  Matrix s_matrix(double t) const;

  std::shared_ptr<const KernelCache> cache_;
  Gaussian rho0_, rhoT_;
  TransformedMarginals transformed_;
  Matrix cross_cov_;
  Matrix diff_;  // sigma sigma^T
};

}  // namespace ousb
