// Times the OpenMP kernels against their serial reference implementations
// and checks that both produce identical results.

#include <chrono>
#include <cstdio>
#include <functional>

#include "ousb/kernels.hpp"
#include "ousb/rng.hpp"
#include "ousb/sim.hpp"

using namespace ousb;

namespace {

double time_ms(const std::function<void()>& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto end = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(end - start).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-22s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %.2e\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main() {
  std::printf("kernel benchmark, %d worker threads\n\n", par::thread_count());
  Rng rng(12345);

  const int n = 2048, m = 2048, d = 8;
  Matrix a(n, d), b(m, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) a(i, k) = rng.normal();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) b(j, k) = rng.normal();

  {
    Matrix r_serial, r_par;
    const double ts = time_ms([&] { r_serial = half_sq_dist_serial(a, b); });
    const double tp = time_ms([&] { r_par = half_sq_dist(a, b); });
    report("half_sq_dist", ts, tp, (r_serial - r_par).cwiseAbs().maxCoeff());
  }
  {
    Matrix r_serial, r_par;
    const double ts = time_ms([&] { r_serial = euclid_dist_serial(a, b); });
    const double tp = time_ms([&] { r_par = euclid_dist(a, b); });
    report("euclid_dist", ts, tp, (r_serial - r_par).cwiseAbs().maxCoeff());
  }
  {
    double r_serial = 0, r_par = 0;
    const double ts = time_ms([&] { r_serial = cross_norm_sum_serial(a, b); });
    const double tp = time_ms([&] { r_par = cross_norm_sum(a, b); });
    report("cross_norm_sum", ts, tp, std::abs(r_serial - r_par));
  }
  {
    const Matrix scores = -half_sq_dist(a, b);
    const Vector add = Vector::Zero(m);
    Vector r_serial, r_par;
    const double ts = time_ms([&] { softmin_rows_serial(scores, add, r_serial); });
    const double tp = time_ms([&] { softmin_rows(scores, add, r_par); });
    report("softmin_rows", ts, tp, (r_serial - r_par).cwiseAbs().maxCoeff());
  }
  {
    const int paths = 20000, steps = 500;
    Matrix x0s = a.topRows(paths < n ? paths : n);
    while (x0s.rows() < paths) {
      Matrix bigger(x0s.rows() * 2, d);
      bigger << x0s, x0s;
      x0s = bigger;
    }
    x0s.conservativeResize(paths, d);
    const Matrix sigma = 0.3 * Matrix::Identity(d, d);
    DriftField drift = [](double, const Vector& x) { return Vector(-0.5 * x); };
    const auto grid = uniform_grid(0.0, 1.0, steps);
    std::vector<Matrix> r_serial, r_par;
    const double ts =
        time_ms([&] { r_serial = em_ensemble_serial(drift, sigma, x0s, grid, {steps}, 7); }, 1);
    const double tp = time_ms([&] { r_par = em_ensemble(drift, sigma, x0s, grid, {steps}, 7); }, 1);
    report("em_ensemble", ts, tp, (r_serial[0] - r_par[0]).cwiseAbs().maxCoeff());
  }
  return 0;
}
