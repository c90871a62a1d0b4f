#include "ousb/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ousb::par {

namespace {

std::atomic<int> g_threads{0};

int default_threads() {
  if (const char* env = std::getenv("OUSB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

int thread_count() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n <= 0) {
    n = default_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& body) {
#ifdef _OPENMP
  const int workers = thread_count();
#pragma omp parallel for schedule(static) num_threads(workers)
  for (int64_t i = 0; i < n; ++i) body(i);
#else
  for (int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace ousb::par

namespace ousb {

namespace {

inline double row_half_sq(const Matrix& a, const Matrix& b, int64_t i, int64_t j) {
  return 0.5 * (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace

Matrix half_sq_dist_serial(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < b.rows(); ++j) out(i, j) = row_half_sq(a, b, i, j);
  return out;
}

Matrix half_sq_dist(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  par::parallel_for(a.rows(), [&](int64_t i) {
    for (int64_t j = 0; j < b.rows(); ++j) out(i, j) = row_half_sq(a, b, i, j);
  });
  return out;
}

Matrix euclid_dist_serial(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < b.rows(); ++j) out(i, j) = (a.row(i) - b.row(j)).norm();
  return out;
}

Matrix euclid_dist(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  par::parallel_for(a.rows(), [&](int64_t i) {
    for (int64_t j = 0; j < b.rows(); ++j) out(i, j) = (a.row(i) - b.row(j)).norm();
  });
  return out;
}

double cross_norm_sum_serial(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (int64_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (int64_t j = 0; j < b.rows(); ++j) row += (a.row(i) - b.row(j)).norm();
    total += row;
  }
  return total;
}

double cross_norm_sum(const Matrix& a, const Matrix& b) {
  Vector rows(a.rows());
  par::parallel_for(a.rows(), [&](int64_t i) {
    double row = 0.0;
    for (int64_t j = 0; j < b.rows(); ++j) row += (a.row(i) - b.row(j)).norm();
    rows[i] = row;
  });
  double total = 0.0;
  for (int64_t i = 0; i < a.rows(); ++i) total += rows[i];
  return total;
}

namespace {

inline double softmin_row_impl(const Matrix& scores, const Vector& add, int64_t i) {
  const int64_t m = scores.cols();
  double hi = -std::numeric_limits<double>::infinity();
  for (int64_t j = 0; j < m; ++j) hi = std::max(hi, scores(i, j) + add[j]);
  double acc = 0.0;
  for (int64_t j = 0; j < m; ++j) acc += std::exp(scores(i, j) + add[j] - hi);
  return -(hi + std::log(acc));
}

inline double softmin_col_impl(const Matrix& scores, const Vector& add, int64_t j) {
  const int64_t n = scores.rows();
  double hi = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < n; ++i) hi = std::max(hi, scores(i, j) + add[i]);
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += std::exp(scores(i, j) + add[i] - hi);
  return -(hi + std::log(acc));
}

}  // namespace

void softmin_rows_serial(const Matrix& scores, const Vector& add, Vector& out) {
  out.resize(scores.rows());
  for (int64_t i = 0; i < scores.rows(); ++i) out[i] = softmin_row_impl(scores, add, i);
}

void softmin_rows(const Matrix& scores, const Vector& add, Vector& out) {
  out.resize(scores.rows());
  par::parallel_for(scores.rows(), [&](int64_t i) { out[i] = softmin_row_impl(scores, add, i); });
}

void softmin_cols_serial(const Matrix& scores, const Vector& add, Vector& out) {
  out.resize(scores.cols());
  for (int64_t j = 0; j < scores.cols(); ++j) out[j] = softmin_col_impl(scores, add, j);
}

void softmin_cols(const Matrix& scores, const Vector& add, Vector& out) {
  out.resize(scores.cols());
  par::parallel_for(scores.cols(), [&](int64_t j) { out[j] = softmin_col_impl(scores, add, j); });
}

}  // namespace ousb
