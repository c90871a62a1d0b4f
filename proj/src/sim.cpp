#include "ousb/sim.hpp"

#include <cmath>

#include "ousb/kernels.hpp"

namespace ousb {

Trajectory euler_maruyama(const DriftField& drift, const Matrix& sigma, const Vector& x0,
                          const std::vector<double>& grid, uint64_t seed) {
  if (grid.size() < 2) throw std::invalid_argument("euler_maruyama: grid needs >= 2 points");
  for (size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("euler_maruyama: grid must increase");
  const int d = static_cast<int>(x0.size());
  Rng rng(seed);
  Trajectory out;
  out.times = grid;
  out.seed = seed;
  out.states.resize(static_cast<int64_t>(grid.size()), d);
  Vector x = x0;
  out.states.row(0) = x.transpose();
  for (size_t k = 0; k + 1 < grid.size(); ++k) {
    const double dt = grid[k + 1] - grid[k];
    const Vector v = drift(grid[k], x);
    if (!v.allFinite())
      throw DegenerateError("euler_maruyama: non-finite drift at step " + std::to_string(k));
    x += v * dt + sigma * (std::sqrt(dt) * rng.normal_vector(d));
    out.states.row(k + 1) = x.transpose();
  }
  return out;
}

Trajectory rk4(const DriftField& flow, const Vector& x0, const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("rk4: grid needs >= 2 points");
  for (size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("rk4: grid must increase");
  Trajectory out;
  out.times = grid;
  out.states.resize(static_cast<int64_t>(grid.size()), x0.size());
  Vector x = x0;
  out.states.row(0) = x.transpose();
  for (size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double h = grid[k + 1] - grid[k];
    const Vector k1 = flow(t, x);
    const Vector k2 = flow(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = flow(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = flow(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw DegenerateError("rk4: non-finite state at step " + std::to_string(k));
    out.states.row(k + 1) = x.transpose();
  }
  return out;
}

namespace {

std::vector<Matrix> em_ensemble_impl(const DriftField& drift, const Matrix& sigma,
                                     const Matrix& x0s, const std::vector<double>& grid,
                                     const std::vector<int>& record_indices, uint64_t seed,
                                     bool parallel) {
  const int64_t n = x0s.rows();
  const int d = static_cast<int>(x0s.cols());
  std::vector<Matrix> records(record_indices.size(), Matrix(n, d));
  auto run_path = [&](int64_t i) {
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(i));
    Vector x = x0s.row(i).transpose();
    size_t rec = 0;
    for (size_t k = 0; k < grid.size(); ++k) {
      if (k > 0) {
        const double dt = grid[k] - grid[k - 1];
        const Vector v = drift(grid[k - 1], x);
        if (!v.allFinite())
          throw DegenerateError("em_ensemble: non-finite drift at step " + std::to_string(k - 1));
        x += v * dt + sigma * (std::sqrt(dt) * rng.normal_vector(d));
      }
      while (rec < record_indices.size() && record_indices[rec] == static_cast<int>(k)) {
        records[rec].row(i) = x.transpose();
        ++rec;
      }
    }
    return;
  };
  if (parallel)
    par::parallel_for(n, run_path);
  else
    for (int64_t i = 0; i < n; ++i) run_path(i);
  return records;
}

}  // namespace

std::vector<Matrix> em_ensemble(const DriftField& drift, const Matrix& sigma, const Matrix& x0s,
                                const std::vector<double>& grid,
                                const std::vector<int>& record_indices, uint64_t seed) {
  return em_ensemble_impl(drift, sigma, x0s, grid, record_indices, seed, true);
}

std::vector<Matrix> em_ensemble_serial(const DriftField& drift, const Matrix& sigma,
                                       const Matrix& x0s, const std::vector<double>& grid,
                                       const std::vector<int>& record_indices, uint64_t seed) {
  return em_ensemble_impl(drift, sigma, x0s, grid, record_indices, seed, false);
}

std::vector<double> uniform_grid(double t0, double t1, int steps) {
  std::vector<double> grid(steps + 1);
  for (int k = 0; k <= steps; ++k) grid[k] = t0 + (t1 - t0) * (static_cast<double>(k) / steps);
  return grid;
}

Vector repressilator_drift(const RepressilatorParams& p, const Vector& x) {
  Vector v(3);
  auto hill = [&](double z) {
    const double ratio = std::max(z, 0.0) / p.k;
    return p.beta / (1.0 + std::pow(ratio, p.hill));
  };
  v[0] = hill(x[2]) - p.gamma * x[0];
  v[1] = hill(x[0]) - p.gamma * x[1];
  v[2] = hill(x[1]) - p.gamma * x[2];
  return v;
}

std::vector<Matrix> repressilator_snapshots(const RepressilatorParams& params, int n_per_snapshot,
                                            const std::vector<double>& snapshot_times,
                                            uint64_t seed, double dt) {
  if (params.beta <= 0 || params.hill <= 0 || params.k <= 0 || params.gamma <= 0 ||
      params.sigma < 0)
    throw std::invalid_argument("repressilator_snapshots: parameters must be positive");
  const int n_snapshots = static_cast<int>(snapshot_times.size());
  std::vector<Matrix> snapshots(n_snapshots, Matrix(n_per_snapshot, 3));
  const Matrix noise = params.sigma * Matrix::Identity(3, 3);
  Vector ic_mean(3);
  ic_mean << 1.0, 1.0, 2.0;
  const double ic_sd = 0.1;  // N(., 0.01 I)

  const int64_t total = static_cast<int64_t>(n_snapshots) * n_per_snapshot;
  par::parallel_for(total, [&](int64_t idx) {
    const int s = static_cast<int>(idx / n_per_snapshot);
    const int i = static_cast<int>(idx % n_per_snapshot);
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(idx));
    Vector x = ic_mean + ic_sd * rng.normal_vector(3);
    const double t_end = snapshot_times[s];
    double t = 0.0;
    while (t < t_end - 1e-12) {
      const double h = std::min(dt, t_end - t);
      const Vector v = repressilator_drift(params, x);
      x += v * h + noise * (std::sqrt(h) * rng.normal_vector(3));
      t += h;
    }
    snapshots[s].row(i) = x.transpose();
  });
  return snapshots;
}

Matrix random_orthogonal_slice(int d, uint64_t seed) {
  Rng rng(seed);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q.leftCols(2);
}

namespace {

GaussianBenchmark benchmark_from_embed(const Matrix& embed, uint64_t seed, int n_samples) {
  const int d = static_cast<int>(embed.rows());
  Matrix core_a(2, 2);
  core_a << 0.0, 1.0, -2.5, 0.0;
  Vector core_m(2);
  core_m << 1.0, -1.0;
  Matrix cov0(2, 2);
  cov0 << 0.1, 0.005, 0.005, 0.1;
  Matrix cov1(2, 2);
  cov1 << 1.1, -2.0, -2.0, 1.1;
  Vector mu0(2), mu1(2);
  mu0 << -2.5, -0.5;
  mu1 << 0.5, 2.5;

  GaussianBenchmark out;
  out.embed = embed;
  out.process = OUProcess::create(embed * core_a * embed.transpose(), embed * core_m,
                                  Matrix::Identity(d, d));
  auto embedded_cov = [&](const Matrix& core) {
    Matrix m = symmetrize(embed * core * embed.transpose());
    // The stated terminal covariance core is indefinite; project before the
    // +0.1 I shift so the marginal is a valid Gaussian.
    if (min_eigenvalue(m) < 0.0) m = psd_project(m);
    return Matrix(m + 0.1 * Matrix::Identity(d, d));
  };
  out.rho0 = Gaussian::create(embed * mu0, embedded_cov(cov0));
  out.rho1 = Gaussian::create(embed * mu1, embedded_cov(cov1));

  Rng rng0 = Rng::derive(seed, 0);
  Rng rng1 = Rng::derive(seed, 1);
  out.samples0 = sample_gaussian(out.rho0, n_samples, rng0);
  out.samples1 = sample_gaussian(out.rho1, n_samples, rng1);
  return out;
}

}  // namespace

GaussianBenchmark gaussian_benchmark(int d, uint64_t seed, int n_samples) {
  if (d < 2) throw std::invalid_argument("gaussian_benchmark: d must be >= 2");
  return benchmark_from_embed(random_orthogonal_slice(d, seed), seed, n_samples);
}

GaussianBenchmark gaussian_benchmark_with_embed(const Matrix& embed, uint64_t seed, int n_samples) {
  if (embed.cols() != 2 || embed.rows() < 2)
    throw std::invalid_argument("gaussian_benchmark: embed must be d x 2 with d >= 2");
  return benchmark_from_embed(embed, seed, n_samples);
}

namespace {

std::pair<Matrix, Matrix> mixture_from_embed(const Matrix& embed, uint64_t seed, int n0, int n1) {
  const int d = static_cast<int>(embed.rows());
  Rng rng(seed);
  auto draw = [&](int n, const Vector& mean_a, double sd_a, const Vector& mean_b, double sd_b) {
    Matrix samples(n, d);
    for (int i = 0; i < n; ++i) {
      const bool first = rng.uniform() < 0.5;
      const Vector& mean = first ? mean_a : mean_b;
      const double sd = first ? sd_a : sd_b;
      // Covariance sd^2 U U^T: supported on the embedded plane.
      samples.row(i) = (mean + sd * (embed * rng.normal_vector(2))).transpose();
    }
    return samples;
  };
  Vector s0a(2), s0b(2), s1a(2), s1b(2);
  s0a << -0.5, -0.5;
  s0b << 0.5, 0.5;
  s1a << -2.5, -2.5;
  s1b << 2.5, 2.5;
  Matrix x0 = draw(n0, embed * s0a, std::sqrt(0.01), embed * s0b, std::sqrt(0.0625));
  Matrix x1 = draw(n1, embed * s1a, std::sqrt(0.01), embed * s1b, std::sqrt(0.25));
  return {x0, x1};
}

}  // namespace

std::pair<Matrix, Matrix> gaussian_mixture_data(int d, uint64_t seed, int n0, int n1) {
  if (d < 2) throw std::invalid_argument("gaussian_mixture_data: d must be >= 2");
  return mixture_from_embed(random_orthogonal_slice(d, seed), seed, n0, n1);
}

std::pair<Matrix, Matrix> gaussian_mixture_data_with_embed(const Matrix& embed, uint64_t seed,
                                                           int n0, int n1) {
  return mixture_from_embed(embed, seed, n0, n1);
}

OUProcess scale_drift(const OUProcess& process, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("scale_drift: gamma must be >= 0");
  return OUProcess::create(gamma * process.drift, process.target, process.sigma);
}

}  // namespace ousb
