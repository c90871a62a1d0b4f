#pragma once

#include <vector>

#include "ousb/ou_process.hpp"

namespace ousb {

// Precomputed time-grid values of e^{tA}, Phi_t and Lambda_t on [0, T],
// plus the square roots of Sigma_T = Phi_T. The two matrix integrals
//
//   Phi_t    = int_0^t e^{uA} sigma sigma^T e^{uA^T} du
//   Lambda_t = int_0^{T-t} e^{-sA} e^{-sA^T} ds
//
// are built once by composite Simpson quadrature on a uniform grid with
// `grid_nodes` panels and queried at arbitrary times afterwards. Off-grid
// queries recompute the integral tail from the nearest node below with local
// Simpson refinement, which keeps results PSD and the composition law exact.
//
// Immutable after construction; safe to share across concurrent readers.
class KernelCache {
 public:
  KernelCache(const OUProcess& process, double horizon, int grid_nodes = 512);

  const OUProcess& process() const { return process_; }
  double horizon() const { return horizon_; }
  int grid_nodes() const { return panels_; }
  double grid_step() const { return step_; }
  double grid_time(int k) const { return k * step_; }

  // All query times must lie in [0, T] (domain error otherwise).
  Matrix exp_drift(double t) const;      // e^{tA}
  Matrix exp_drift_neg(double t) const;  // e^{-tA}
  Matrix phi(double t) const;
  Matrix lam(double t) const;

  const Matrix& phi_node(int k) const { return phi_[k]; }
  Matrix lam_node(int k) const;
  const Matrix& phi_T() const { return phi_.back(); }

  // Throw DegenerateError when Phi_T is numerically singular.
  const Matrix& sigmaT_root() const;
  const Matrix& sigmaT_inv_root() const;
  const Matrix& phi_T_inverse() const;

  // Bridge-time queries are clamped to [eps, T - eps] with eps = 1e-4 T;
  // Lambda_T = 0 makes the control singular exactly at the endpoint.
  double clamp_time(double t) const;

 private:
  double checked_time(double t, const char* what) const;

  OUProcess process_;
  double horizon_;
  int panels_;
  double step_;
  Matrix diff_;  // sigma sigma^T
  std::vector<Matrix> exp_a_;      // e^{t_k A}
  std::vector<Matrix> exp_a_neg_;  // e^{-t_k A}
  std::vector<Matrix> phi_;
  std::vector<Matrix> lam_l_;  // L(t_k) = int_0^{t_k} e^{-sA} e^{-sA^T} ds
  Matrix sigmaT_root_, sigmaT_inv_root_, phi_T_inv_;
  bool degenerate_ = false;
};

// Law of the unconditioned process at time t started from x0:
// mean e^{tA}(x0 - m) + m, covariance Phi_t.
Gaussian unconditional_moments(const OUProcess& process, const KernelCache& cache,
                               const Vector& x0, double t);

}  // namespace ousb
