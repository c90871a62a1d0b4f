#pragma once

#include "ousb/gsb.hpp"
#include "ousb/metrics.hpp"
#include "ousb/refit.hpp"
#include "ousb/sim.hpp"

namespace ousb {

// Mean BW^2 error of the learned marginals against the closed-form GSB, plus
// the L2 force error of the learned drift, for one trained checkpoint.
struct MarginalEval {
  double bw2_mean = 0.0;
  double force_error = 0.0;
};

MarginalEval evaluate_against_gsb(const Checkpoint& checkpoint, const GSBSolution& truth,
                                  int eval_samples, int em_steps, int n_eval_times, uint64_t seed);

struct GaussianBenchmarkRun {
  uint64_t seed = 0;
  double mvou_bw2 = 0.0;
  double bm_bw2 = 0.0;
  double mvou_force = 0.0;
  double bm_force = 0.0;
};

struct GaussianBenchmarkResult {
  std::vector<GaussianBenchmarkRun> runs;
  double mvou_bw2_mean = 0.0;
  double bm_bw2_mean = 0.0;
  double mvou_force_mean = 0.0;
  double bm_force_mean = 0.0;
};

// The two-Gaussian benchmark: train mvOU-OTFM and the Brownian-reference
// ablation on the same sampled data, score both against the closed-form GSB.
GaussianBenchmarkResult run_gaussian_benchmark(int d, const std::vector<uint64_t>& seeds,
                                               TrainConfig config, int eval_samples = 512,
                                               int em_steps = 100, int n_eval_times = 11);

std::vector<Snapshot> make_repressilator_snapshots(uint64_t seed, int n_per_snapshot = 100,
                                                   int n_snapshots = 10, double t_end = 10.0);

struct RepressilatorLooResult {
  std::vector<double> energy_by_iterate;  // averaged over held-out points and seeds
  std::vector<double> emd_by_iterate;
  Matrix fitted_drift;  // full-data refit, final iterate, last seed
  bool sign_pattern_ok = false;
};

RepressilatorLooResult run_repressilator_loo(const std::vector<uint64_t>& seeds,
                                             TrainConfig config, int outer_iters = 3,
                                             int n_per_snapshot = 100, int n_snapshots = 10);

// True inhibition sign pattern check: fitted A negative at the cyclic
// entries (0,2), (1,0), (2,1) of the repressilator Jacobian.
bool repressilator_sign_pattern(const Matrix& fitted_drift);
Matrix repressilator_jacobian(const RepressilatorParams& params);

struct PlantedRecoveryResult {
  std::vector<double> rel_errors;  // per seed, final iterate
  double median = 0.0;
  OUProcess truth;
};

// Iterated refit on data simulated from a known d = 2 rotational mvOU
// process; reports ||A_fit - A*||_F / ||A*||_F.
PlantedRecoveryResult run_planted_recovery(const std::vector<uint64_t>& seeds, TrainConfig config,
                                           int outer_iters = 3, int n_per_snapshot = 200);

}  // namespace ousb
