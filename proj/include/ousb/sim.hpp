#pragma once

#include <functional>
#include <vector>

#include "ousb/ou_process.hpp"
#include "ousb/rng.hpp"

namespace ousb {

using DriftField = std::function<Vector(double, const Vector&)>;

struct Trajectory {
  std::vector<double> times;
  Matrix states;  // one row per time
  uint64_t seed = 0;
};

// X_{k+1} = X_k + drift dt + sigma sqrt(dt) xi. NaN drift aborts with the
// step index in the message.
Trajectory euler_maruyama(const DriftField& drift, const Matrix& sigma, const Vector& x0,
                          const std::vector<double>& grid, uint64_t seed);

// Classical 4th-order Runge-Kutta for the probability-flow ODE.
Trajectory rk4(const DriftField& flow, const Vector& x0, const std::vector<double>& grid);

// Terminal states of n independent paths started from the rows of x0s;
// path i uses Rng::derive(seed, i) so results do not depend on worker count.
// Returns one n x d matrix per requested record time (which must be a subset
// of the grid, matched by index).
std::vector<Matrix> em_ensemble(const DriftField& drift, const Matrix& sigma, const Matrix& x0s,
                                const std::vector<double>& grid,
                                const std::vector<int>& record_indices, uint64_t seed);
std::vector<Matrix> em_ensemble_serial(const DriftField& drift, const Matrix& sigma,
                                       const Matrix& x0s, const std::vector<double>& grid,
                                       const std::vector<int>& record_indices, uint64_t seed);

std::vector<double> uniform_grid(double t0, double t1, int steps);

struct RepressilatorParams {
  double beta = 10.0;
  double hill = 3.0;   // n
  double k = 1.0;
  double gamma = 1.0;
  double sigma = 0.1;
};

Vector repressilator_drift(const RepressilatorParams& params, const Vector& x);

// Snapshots drawn from independent trajectories started at N([1,1,2], 0.01 I).
// States are not clipped; the Hill terms guard negative excursions through
// max(x, 0).
std::vector<Matrix> repressilator_snapshots(const RepressilatorParams& params, int n_per_snapshot,
                                            const std::vector<double>& snapshot_times,
                                            uint64_t seed, double dt = 1e-3);

struct GaussianBenchmark {
  OUProcess process;
  Gaussian rho0;
  Gaussian rho1;
  Matrix samples0;  // N x d
  Matrix samples1;
  Matrix embed;  // d x 2 slice of an orthogonal matrix
};

// The two-Gaussian benchmark instance: rotational drift embedded through a
// random orthogonal d x 2 slice, unit diffusion, horizon 1, 128 samples per
// marginal by default. Pass a fixed embed matrix to pin the construction.
GaussianBenchmark gaussian_benchmark(int d, uint64_t seed, int n_samples = 128);
GaussianBenchmark gaussian_benchmark_with_embed(const Matrix& embed, uint64_t seed,
                                                int n_samples = 128);

// Two-component Gaussian mixtures at t = 0 and t = 1 (1:1 ratio), embedded
// with the same kind of d x 2 slice.
std::pair<Matrix, Matrix> gaussian_mixture_data(int d, uint64_t seed, int n0 = 128, int n1 = 128);
std::pair<Matrix, Matrix> gaussian_mixture_data_with_embed(const Matrix& embed, uint64_t seed,
                                                           int n0 = 128, int n1 = 128);

// Orthogonal d x 2 slice via QR of a seeded normal matrix with sign-fixed
// R diagonal.
Matrix random_orthogonal_slice(int d, uint64_t seed);

// Reference with drift gamma * A; m and sigma unchanged.
OUProcess scale_drift(const OUProcess& process, double gamma);

}  // namespace ousb
