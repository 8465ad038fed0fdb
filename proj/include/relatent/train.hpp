#pragma once

#include <string>
#include <vector>

#include "relatent/config.hpp"
#include "relatent/data.hpp"
#include "relatent/model.hpp"

namespace relatent {

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double loss_np = 0.0;
  double loss_kl = 0.0;
  double loss_sd = 0.0;
  double loss_c = 0.0;
  double loss_total = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  double best_val = 0.0;
  int best_epoch = -1;
  std::vector<EpochMetrics> history;
};

struct BatchLossParts {
  double np = 0.0, kl = 0.0, sd = 0.0, c = 0.0, total = 0.0;
};

/// One optimization step on an explicit batch; exposed for the training
/// smoke tests. Consumes window/noise randomness from `rng`.
BatchLossParts train_batch(Model& model, const LoadedDataset& data,
                           const std::vector<int>& traj_ids,
                           const TrainingConfig& cfg, AdamOptimizer& opt,
                           double lr, Rng& rng);

/// Full optimization loop with per-epoch validation, JSONL metrics and
/// best/last checkpoints under `run_dir` (pass "" to keep everything in
/// memory). `resume` continues from the last checkpoint when present.
TrainResult train_model(Model& model, const LoadedDataset& data,
                        const TrainingConfig& cfg, const EvalProtocol& eval,
                        const std::string& run_dir, bool resume = false);

}  // namespace relatent
