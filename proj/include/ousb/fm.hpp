#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "ousb/bridge.hpp"
#include "ousb/eot.hpp"
#include "ousb/net.hpp"

namespace ousb {

struct Snapshot {
  double time = 0.0;
  Matrix samples;  // one row per sample
};

enum class ScoreWeight {
  kConstant,    // lambda_t = score_weight_value
  kOmegaTrace,  // lambda_t = trace(Omega_t) / d
};

struct TrainConfig {
  int batch = 64;
  double learning_rate = 1e-2;
  int iterations = 2500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-2;
  double adam_eps = 1e-8;
  ScoreWeight score_weight = ScoreWeight::kConstant;
  double score_weight_value = 1.0;
  uint64_t seed = 0;
  double sinkhorn_epsilon = 1.0;
  int sinkhorn_max_iters = 10000;
  double sinkhorn_tol = 1e-8;
  int cache_grid = 512;
  int hidden_width = 64;

  void validate() const;
};

struct Checkpoint {
  std::vector<int> arch;
  FeedForwardNet flow_net;   // u_theta
  FeedForwardNet score_net;  // s_phi
  OUProcess process;
  double t_begin = 0.0;
  double t_end = 1.0;
  uint64_t seed = 0;
  int iterations = 0;
  double loss_first = 0.0;  // mean loss over the first 10% of iterations
  double loss_last = 0.0;   // mean loss over the last 10%
  std::vector<double> snapshot_times;
};

void to_json(nlohmann::json& j, const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

struct CfmItem {
  double t = 0.0;       // bridge time within the segment
  double t_norm = 0.0;  // network input time in [0, 1]
  Vector x0, xT, z;
  const KernelCache* cache = nullptr;
};

struct CfmLoss {
  double value = 0.0;
  NetGrads flow_grads;
  NetGrads score_grads;
};

// Conditional (flow, score)-matching loss over a batch; targets come from the
// bridge statistics of each item's cache. Target evaluation runs on parallel
// workers; the loss reduction is in fixed batch order so values are
// bit-stable for any worker count.
CfmLoss cfm_loss(const FeedForwardNet& flow, const FeedForwardNet& score,
                 const std::vector<CfmItem>& items, ScoreWeight weight_mode,
                 double weight_value);

// Spec-facing overload for the single-cache case: fills in cache pointers and
// the t / horizon normalisation.
CfmLoss cfm_loss(const FeedForwardNet& flow, const FeedForwardNet& score, const KernelCache& cache,
                 std::vector<CfmItem> items, ScoreWeight weight_mode = ScoreWeight::kConstant,
                 double weight_value = 1.0);

// mvOU-OTFM: couple consecutive snapshots with the log-kernel cost, then
// regress flow and score networks against the exact bridge targets. Raises
// DegenerateError naming the segment if any Sinkhorn solve fails to converge.
Checkpoint train(const std::vector<Snapshot>& snapshots, const OUProcess& process,
                 const TrainConfig& config);

// Learned SB drift v = u_theta + D s_phi at global time t.
Vector sb_drift(const Checkpoint& checkpoint, double t, const Vector& x);
Matrix sb_drift_batch(const Checkpoint& checkpoint, double t, const Matrix& x_rows);

}  // namespace ousb
