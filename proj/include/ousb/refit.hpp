#pragma once

#include "ousb/fm.hpp"

namespace ousb {

struct RidgeFit {
  Matrix drift;          // A
  Vector target;         // m
  double lambda = 0.0;   // selected ridge penalty
  double cv_mse = 0.0;   // cross-validated drift-prediction MSE at the selected lambda
  double residual = 0.0; // in-sample MSE of the final fit
  double condition = 0.0;
  bool target_updated = false;  // false when m was kept at its previous value
};

// Affine ridge regression v ~ B x + c per lambda with k-fold cross-validation
// on drift-prediction MSE; reference parameters recovered as A = B and
// m = -B^{-1} c. m falls back to prev_target when B's condition number
// exceeds 1e8 (m is unidentifiable when A is near zero). Non-positive lambdas
// are excluded from the grid.
RidgeFit ridge_fit(const Matrix& states, const Matrix& drifts,
                   const std::vector<double>& lambda_grid, const Vector& prev_target,
                   int folds = 5);

inline std::vector<double> default_lambda_grid() {
  return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
}

struct RefitIteration {
  OUProcess process;  // reference used for this round of training
  Checkpoint checkpoint;
  RidgeFit fit;  // fitted update produced by this round
};

struct RefitState {
  std::vector<RefitIteration> iterations;  // append-only history
  OUProcess final_process;
};

// Alternates mvOU-OTFM training with ridge updates of (A, m). Iteration 0
// trains with `initial` (typically the Brownian reference).
RefitState iterated_refit(const std::vector<Snapshot>& snapshots, const OUProcess& initial,
                          int outer_iters, const TrainConfig& config,
                          const std::vector<double>& lambda_grid = default_lambda_grid());

struct LeaveOneOutResult {
  int held_out = 0;
  std::vector<double> emd;     // one entry per outer iterate
  std::vector<double> energy;  // one entry per outer iterate
  Matrix predicted;            // samples predicted at the held-out time, final iterate
};

// Hold out interior snapshot i, run iterated_refit on the rest, and score the
// forward-SDE prediction of t_i from t_{i-1} for every iterate. Endpoint
// indices are rejected.
LeaveOneOutResult leave_one_out(const std::vector<Snapshot>& snapshots, int held_out,
                                const OUProcess& initial, int outer_iters,
                                const TrainConfig& config, int em_steps = 100);

}  // namespace ousb
