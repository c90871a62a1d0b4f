#pragma once

#include "ousb/kernel_cache.hpp"
#include "ousb/rng.hpp"

namespace ousb {

// Endpoint conditioning (0, x0), (T, xT) of the reference process.
struct BridgePin {
  Vector x0;
  Vector xT;
  double horizon = 0.0;

  static BridgePin create(const Vector& x0, const Vector& xT, double horizon);
};

struct BridgeMoments {
  Vector mean;  // mu_{t | (x0, xT)}
  Matrix cov;   // Omega_t, depends on t only
};

// Extra drift induced by the endpoint conditioning:
// c = -Lambda_t^{-1} (y - k_t), k_t = e^{-(T-t)A}(xT - m) + m.
// t is clamped to [eps, T - eps]; a Lambda_t singular inside the clamp raises
// DegenerateError.
Vector bridge_control(const KernelCache& cache, const BridgePin& pin, double t, const Vector& y);

// Mean and covariance of the bridge law at time t (exact at the endpoints).
BridgeMoments bridge_moments(const KernelCache& cache, const BridgePin& pin, double t);

// Omega_{s,t} for s <= t; Omega_{t,t} equals bridge_moments(t).cov.
Matrix bridge_two_time_cov(const KernelCache& cache, const BridgePin& pin, double s, double t);

// grad_x log N(x; mu_{t|.}, Omega_t) = Omega_t^{-1} (mu_{t|.} - x).
Vector bridge_score(const KernelCache& cache, const BridgePin& pin, double t, const Vector& x);

// Conditional probability flow u = A(x - m) + c_{t|.}(x) - D s_{t|.}(x).
Vector bridge_flow(const KernelCache& cache, const BridgePin& pin, double t, const Vector& x);

// One draw from N(mu_{t|.}, Omega_t) via the PSD factor of Omega_t.
Vector bridge_sample(const KernelCache& cache, const BridgePin& pin, double t, Rng& rng);
Vector bridge_sample(const KernelCache& cache, const BridgePin& pin, double t, uint64_t seed);

}  // namespace ousb
