#pragma once

#include <nlohmann/json_fwd.hpp>

#include "ousb/linalg.hpp"

namespace ousb {

// Reference dynamics dX = A (X - m) dt + sigma dB.
struct OUProcess {
  int dim = 0;
  Matrix drift;   // A
  Vector target;  // m
  Matrix sigma;

  Matrix diffusivity() const { return 0.5 * sigma * sigma.transpose(); }

  // Validates shapes, finiteness and that D = sigma sigma^T / 2 is PSD.
  // Singular A combined with nonzero m is rejected (the affine rewrite
  // b = -A m has no inverse image there).
  static OUProcess create(const Matrix& drift, const Vector& target, const Matrix& sigma);
};

struct Gaussian {
  Vector mean;
  Matrix cov;  // stored symmetrized

  // Symmetrizes the covariance; rejects asymmetry above 1e-10 (max norm) or
  // eigenvalues below -1e-10.
  static Gaussian create(const Vector& mean, const Matrix& cov);
};

void to_json(nlohmann::json& j, const OUProcess& p);
OUProcess process_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Gaussian& g);
Gaussian gaussian_from_json(const nlohmann::json& j);

// Draws n samples (rows) from the Gaussian via its eigendecomposition root.
Matrix sample_gaussian(const Gaussian& g, int n, class Rng& rng);

}  // namespace ousb
