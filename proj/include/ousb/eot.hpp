#pragma once

#include <utility>
#include <vector>

#include "ousb/kernel_cache.hpp"
#include "ousb/rng.hpp"

namespace ousb {

// Discrete entropic transport plan with its dual potentials.
struct Coupling {
  Matrix plan;  // N x N', nonnegative, marginals match the input weights
  Vector f;     // dual potential, length N
  Vector g;     // dual potential, length N'
  double epsilon = 1.0;
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0.0;
};

// Static SBP log-kernel cost between sample sets (rows):
// C_ij = 0.5 (x'_j - mu_T^{x_i})^T Sigma_T^{-1} (x'_j - mu_T^{x_i}),
// computed as half squared distances after the Sigma_T^{-1/2} whitening so
// entries stay nonnegative.
Matrix mvou_cost(const KernelCache& cache, const Matrix& x0, const Matrix& xT);

// Log-domain Sinkhorn. a and b must be strictly positive probability vectors.
// Convergence is the l1 marginal violation, checked every 10 iterations;
// failure to converge is reported through the flags, not thrown.
Coupling sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double epsilon = 1.0,
                  int max_iters = 10000, double tol = 1e-8);

// B i.i.d. categorical draws over the N*N' plan cells (renormalised
// internally) by cumulative-sum inversion with strict upper-bound search.
std::vector<std::pair<int, int>> sample_coupling(const Coupling& coupling, int batch, Rng& rng);
std::vector<std::pair<int, int>> sample_coupling(const Coupling& coupling, int batch, uint64_t seed);

// Flattened row-major cumulative masses; reusable across repeated sampling.
std::vector<double> coupling_cumulative(const Coupling& coupling);
std::pair<int, int> sample_coupling_cell(const std::vector<double>& cumulative, int cols, Rng& rng);

}  // namespace ousb
