#include "ousb/bridge.hpp"

namespace ousb {

namespace {

void check_pin(const KernelCache& cache, const BridgePin& pin) {
  if (pin.x0.size() != cache.process().dim || pin.xT.size() != cache.process().dim)
    throw std::invalid_argument("bridge: pin dimension does not match process");
  if (std::abs(pin.horizon - cache.horizon()) > 1e-12 * std::max(1.0, cache.horizon()))
    throw std::invalid_argument("bridge: pin horizon does not match cache");
}

}  // namespace

BridgePin BridgePin::create(const Vector& x0, const Vector& xT, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("BridgePin: horizon must be positive");
  if (!x0.allFinite() || !xT.allFinite() || x0.size() != xT.size())
    throw std::invalid_argument("BridgePin: endpoints must be finite and of equal length");
  return BridgePin{x0, xT, horizon};
}

Vector bridge_control(const KernelCache& cache, const BridgePin& pin, double t, const Vector& y) {
  check_pin(cache, pin);
  const OUProcess& p = cache.process();
  const double tc = cache.clamp_time(t);
  const Vector k_t = cache.exp_drift_neg(pin.horizon - tc) * (pin.xT - p.target) + p.target;
  SymEig eig = sym_eig(cache.lam(tc));
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0) || eig.values.minCoeff() < 1e-14 * lmax)
    throw DegenerateError("bridge_control: Lambda_t numerically singular inside the clamp");
  const Vector rhs = eig.vectors.transpose() * (k_t - y);
  return eig.vectors * (rhs.array() / eig.values.array()).matrix();
}

BridgeMoments bridge_moments(const KernelCache& cache, const BridgePin& pin, double t) {
  check_pin(cache, pin);
  const OUProcess& p = cache.process();
  const double tc = std::min(std::max(t, 0.0), pin.horizon);
  const Matrix phi_t = cache.phi(tc);
  const Matrix e_rem = cache.exp_drift(pin.horizon - tc);  // e^{(T-t)A}
  const Matrix gain = phi_t * e_rem.transpose() * cache.phi_T_inverse();

  const Vector mu_t = cache.exp_drift(tc) * (pin.x0 - p.target) + p.target;
  const Vector mu_T = cache.exp_drift(pin.horizon) * (pin.x0 - p.target) + p.target;

  BridgeMoments out;
  out.mean = mu_t + gain * (pin.xT - mu_T);
  out.cov = symmetrize(phi_t - gain * e_rem * phi_t);
  return out;
}

Matrix bridge_two_time_cov(const KernelCache& cache, const BridgePin& pin, double s, double t) {
  check_pin(cache, pin);
  if (s > t) throw std::domain_error("bridge_two_time_cov: requires s <= t");
  const double T = pin.horizon;
  const Matrix phi_s = cache.phi(s);
  const Matrix phi_t = cache.phi(t);
  return phi_s * cache.exp_drift(t - s).transpose() -
         phi_s * cache.exp_drift(T - s).transpose() * cache.phi_T_inverse() *
             cache.exp_drift(T - t) * phi_t;
}

Vector bridge_score(const KernelCache& cache, const BridgePin& pin, double t, const Vector& x) {
  const double tc = cache.clamp_time(t);
  BridgeMoments m = bridge_moments(cache, pin, tc);
  SymEig eig = sym_eig(m.cov);
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0)) throw DegenerateError("bridge_score: Omega_t singular after clamp");
  const Vector clamped = eig.values.cwiseMax(kEigClampRel * lmax);
  const Vector rhs = eig.vectors.transpose() * (m.mean - x);
  return eig.vectors * (rhs.array() / clamped.array()).matrix();
}

Vector bridge_flow(const KernelCache& cache, const BridgePin& pin, double t, const Vector& x) {
  const OUProcess& p = cache.process();
  const double tc = cache.clamp_time(t);
  return p.drift * (x - p.target) + bridge_control(cache, pin, tc, x) -
         p.diffusivity() * bridge_score(cache, pin, tc, x);
}

Vector bridge_sample(const KernelCache& cache, const BridgePin& pin, double t, Rng& rng) {
  const double tc = cache.clamp_time(t);
  BridgeMoments m = bridge_moments(cache, pin, tc);
  const Matrix root = psd_root_clamped(m.cov);
  return m.mean + root * rng.normal_vector(static_cast<int>(m.mean.size()));
}

Vector bridge_sample(const KernelCache& cache, const BridgePin& pin, double t, uint64_t seed) {
  Rng rng(seed);
  return bridge_sample(cache, pin, t, rng);
}

}  // namespace ousb
