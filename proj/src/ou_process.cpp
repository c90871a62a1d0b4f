#include "ousb/ou_process.hpp"

#include <nlohmann/json.hpp>

#include "ousb/rng.hpp"

namespace ousb {

using nlohmann::json;

OUProcess OUProcess::create(const Matrix& drift, const Vector& target, const Matrix& sigma) {
  const int d = static_cast<int>(drift.rows());
  if (drift.cols() != d || sigma.rows() != d || sigma.cols() != d || target.size() != d)
    throw std::invalid_argument("OUProcess: A, sigma must be d x d and m length d");
  if (!drift.allFinite() || !target.allFinite() || !sigma.allFinite())
    throw std::invalid_argument("OUProcess: non-finite parameters");
  OUProcess p{d, drift, target, sigma};
  if (min_eigenvalue(p.diffusivity()) < -1e-12)
    throw std::invalid_argument("OUProcess: diffusivity not PSD");
  if (target.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::FullPivLU<Matrix> lu(drift);
    lu.setThreshold(1e-12);
    const bool zero_drift = drift.cwiseAbs().maxCoeff() == 0.0;
    if (!zero_drift && !lu.isInvertible())
      throw std::invalid_argument("OUProcess: singular A with nonzero m is not supported");
  }
  return p;
}

Gaussian Gaussian::create(const Vector& mean, const Matrix& cov) {
  if (cov.rows() != cov.cols() || mean.size() != cov.rows())
    throw std::invalid_argument("Gaussian: dimension mismatch");
  if (!mean.allFinite() || !cov.allFinite())
    throw std::invalid_argument("Gaussian: non-finite parameters");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >= 1e-10)
    throw std::invalid_argument("Gaussian: covariance not symmetric");
  Gaussian g{mean, symmetrize(cov)};
  if (min_eigenvalue(g.cov) < -1e-10)
    throw std::invalid_argument("Gaussian: covariance has eigenvalue below -1e-10");
  return g;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
    throw DataError(std::string(what) + ": expected row-major array of length " +
                    std::to_string(rows * cols));
  Matrix m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[k++].get<double>();
  return m;
}

Vector vector_from_json(const json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw DataError(std::string(what) + ": expected array of length " + std::to_string(n));
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void to_json(json& j, const OUProcess& p) {
  j = json{{"dim", p.dim},
           {"A", matrix_to_json(p.drift)},
           {"m", std::vector<double>(p.target.data(), p.target.data() + p.target.size())},
           {"sigma", matrix_to_json(p.sigma)}};
}

OUProcess process_from_json(const json& j) {
  if (!j.contains("dim")) throw DataError("process: missing key 'dim'");
  const int d = j.at("dim").get<int>();
  if (d <= 0) throw DataError("process: dim must be positive");
  for (const char* key : {"A", "m", "sigma"})
    if (!j.contains(key)) throw DataError(std::string("process: missing key '") + key + "'");
  return OUProcess::create(matrix_from_json(j.at("A"), d, d, "process.A"),
                           vector_from_json(j.at("m"), d, "process.m"),
                           matrix_from_json(j.at("sigma"), d, d, "process.sigma"));
}

void to_json(json& j, const Gaussian& g) {
  const int d = static_cast<int>(g.mean.size());
  j = json{{"dim", d},
           {"mean", std::vector<double>(g.mean.data(), g.mean.data() + d)},
           {"cov", matrix_to_json(g.cov)}};
}

Gaussian gaussian_from_json(const json& j) {
  if (!j.contains("dim")) throw DataError("gaussian: missing key 'dim'");
  const int d = j.at("dim").get<int>();
  for (const char* key : {"mean", "cov"})
    if (!j.contains(key)) throw DataError(std::string("gaussian: missing key '") + key + "'");
  return Gaussian::create(vector_from_json(j.at("mean"), d, "gaussian.mean"),
                          matrix_from_json(j.at("cov"), d, d, "gaussian.cov"));
}

Matrix sample_gaussian(const Gaussian& g, int n, Rng& rng) {
  const int d = static_cast<int>(g.mean.size());
  const Matrix root = psd_root_clamped(g.cov);
  Matrix out(n, d);
  for (int i = 0; i < n; ++i) out.row(i) = (g.mean + root * rng.normal_vector(d)).transpose();
  return out;
}

}  // namespace ousb
