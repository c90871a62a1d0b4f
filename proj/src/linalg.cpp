#include "ousb/linalg.hpp"

#include <cmath>

namespace ousb {

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("expm: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("expm: non-finite entries");
  const Eigen::Index d = m.rows();
  const Matrix id = Matrix::Identity(d, d);

  // Pade-13 coefficients (Higham 2005).
  static const double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  Matrix a = m;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    a /= std::pow(2.0, squarings);
  }

  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a2 * a4;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

SymEig sym_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw DegenerateError("sym_eig: eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix sqrtm_psd(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("sqrtm_psd: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw DegenerateError("sqrtm_psd: matrix not symmetric");
  SymEig eig = sym_eig(m);
  const double norm = std::max(m.cwiseAbs().maxCoeff(), 0.0);
  if (eig.values.minCoeff() < -1e-8 * std::max(norm, 1e-300))
    throw DegenerateError("sqrtm_psd: matrix not PSD");
  Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrize(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
}

Matrix psd_root_clamped(const Matrix& m) {
  SymEig eig = sym_eig(m);
  Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrize(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
}

Matrix psd_project(const Matrix& m) {
  SymEig eig = sym_eig(m);
  Vector vals = eig.values.cwiseMax(0.0);
  return symmetrize(eig.vectors * vals.asDiagonal() * eig.vectors.transpose());
}

Matrix psd_clamped_inverse(const Matrix& m) {
  SymEig eig = sym_eig(m);
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0)) throw DegenerateError("psd_clamped_inverse: matrix is zero or negative");
  Vector inv = eig.values.cwiseMax(kEigClampRel * lmax).cwiseInverse();
  return symmetrize(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
}

Matrix pd_inverse(const Matrix& m, double rel_tol) {
  SymEig eig = sym_eig(m);
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0) || eig.values.minCoeff() < rel_tol * lmax)
    throw DegenerateError("pd_inverse: matrix numerically singular");
  Vector inv = eig.values.cwiseInverse();
  return symmetrize(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
}

double min_eigenvalue(const Matrix& m) { return sym_eig(m).values.minCoeff(); }

}  // namespace ousb
