#pragma once

#include <cstdint>
#include <functional>

#include "ousb/linalg.hpp"

namespace ousb::par {

// Worker cap shared by all OpenMP kernels. Settable via set_thread_count or
// the OUSB_THREADS environment variable; kernels are written so that results
// are bit-identical for any thread count (each output element is owned by
// exactly one worker, reductions run in fixed index order).
int thread_count();
void set_thread_count(int n);

void parallel_for(int64_t n, const std::function<void(int64_t)>& body);

}  // namespace ousb::par

namespace ousb {

// Data-parallel inner kernels. Each has a serial reference implementation
// kept for testing; ousb_bench compares the two.

// out(i, j) = 0.5 * ||a_i - b_j||^2 over rows of A (n x d) and B (m x d).
Matrix half_sq_dist(const Matrix& a, const Matrix& b);
Matrix half_sq_dist_serial(const Matrix& a, const Matrix& b);

// out(i, j) = ||a_i - b_j||.
Matrix euclid_dist(const Matrix& a, const Matrix& b);
Matrix euclid_dist_serial(const Matrix& a, const Matrix& b);

// sum_{i,j} ||a_i - b_j|| with per-row partial sums reduced in index order.
double cross_norm_sum(const Matrix& a, const Matrix& b);
double cross_norm_sum_serial(const Matrix& a, const Matrix& b);

// out(i) = -logsumexp_j(scores(i, j) + add(j)); the log-domain Sinkhorn row
// update. `softmin_cols` is the column-wise analogue.
void softmin_rows(const Matrix& scores, const Vector& add, Vector& out);
void softmin_rows_serial(const Matrix& scores, const Vector& add, Vector& out);
void softmin_cols(const Matrix& scores, const Vector& add, Vector& out);
void softmin_cols_serial(const Matrix& scores, const Vector& add, Vector& out);

}  // namespace ousb
