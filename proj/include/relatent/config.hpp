#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "relatent/model.hpp"
#include "relatent/sim.hpp"

namespace relatent {

struct TrainingConfig {
  double lambda_np = 1.0;
  double lambda_kl = 0.1;
  double lambda_sd = 1.0;
  double lambda_c = 0.001;
  int m = 3;            // encoder windows per training step
  int enc_window = 10;  // T_E
  int dec_window = 10;  // decoder window length (start + predictions)
  int epochs = 150;
  int batch_size = 32;
  double lr_max = 3e-3;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
  std::optional<double> sparsity_p;
  bool random_sampling = true;   // the window-sampling trick
  bool kl_printed_sign = false;  // flips the KL term's sign
  NoiseConfig noise;
  std::uint64_t seed = 0;
};

/// Everything a run needs; profiles fill defaults, then an optional JSON
/// config file, then CLI flags override in that order.
struct RunConfig {
  std::string profile = "desk";
  char combo = 'a';
  int n_train = 500;
  int n_valid = 50;
  int n_test = 100;
  SimConfig sim;
  ModelConfig model;
  TrainingConfig training;
  EvalProtocol eval;
  std::uint64_t seed = 0;
  std::string dataset_dir;
  std::string out_dir;
  std::vector<int> k_range{2, 3, 4, 5};
};

/// Built-in profiles: "desk" (CI scale) and "paper" (full scale).
RunConfig profile_config(const std::string& name);

/// Overlays non-null fields of a JSON document onto `cfg`.
void merge_config_json(RunConfig& cfg, const std::string& json_text);

std::string run_config_to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::string& profile,
                          const std::string& config_path);

}  // namespace relatent
