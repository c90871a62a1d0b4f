#pragma once

#include <Eigen/Dense>

#include "ousb/errors.hpp"

namespace ousb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative eigenvalue floor used when inverting nearly singular PSD matrices
// (bridge covariances degenerate at the endpoints).
inline constexpr double kEigClampRel = 1e-12;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Matrix exponential by scaling-and-squaring with a degree-13 Pade
// approximant. Throws std::invalid_argument on non-finite input.
Matrix expm(const Matrix& m);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues are
// clamped to zero. Requires symmetry within 1e-8 of the scale and eigenvalues
// >= -1e-8 * ||M||, else throws DegenerateError.
Matrix sqrtm_psd(const Matrix& m);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // columns
};

SymEig sym_eig(const Matrix& m);

// Inverse of a PSD matrix with eigenvalues clamped at max(l, kEigClampRel * l_max).
// Throws DegenerateError if the matrix is zero (nothing to clamp against).
Matrix psd_clamped_inverse(const Matrix& m);

// Exact inverse of a PD matrix; throws DegenerateError when the smallest
// eigenvalue falls below rel_tol * largest.
Matrix pd_inverse(const Matrix& m, double rel_tol = 1e-12);

// PSD square root with negatives clamped to zero (no symmetry error checks;
// used on matrices already known symmetric).
Matrix psd_root_clamped(const Matrix& m);

// Projects a symmetric matrix onto the PSD cone (clamps negative eigenvalues).
Matrix psd_project(const Matrix& m);

double min_eigenvalue(const Matrix& m);

}  // namespace ousb
