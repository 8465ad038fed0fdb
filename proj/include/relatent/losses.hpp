#pragma once

#include <optional>
#include <vector>

#include "relatent/rng.hpp"
#include "relatent/tensor.hpp"

namespace relatent {

/// Mean squared error over every step/node/dimension. Both lists hold one
/// [rows, node_dim] tensor per predicted step.
TensorPtr node_prediction_loss(const std::vector<TensorPtr>& pred,
                               const std::vector<TensorPtr>& truth);

/// Mean over edges and components of KL(N(mu, sigma^2) || N(0, 1)).
/// `printed_sign` flips the result's sign (the non-regularizing variant).
TensorPtr kl_loss(const TensorPtr& mean, const TensorPtr& logstd,
                  bool printed_sign = false);

/// Population standard deviation per edge/component across the sampled
/// windows, averaged. Exactly zero when all samples coincide (m == 1
/// included).
TensorPtr relation_sd_loss(const std::vector<TensorPtr>& relation_samples);

/// Without a sparsity prior: mean of -log(1 - c). With prior p: entries in
/// the lowest p-quantile of the batch get -log(1 - c), the rest -log(c).
TensorPtr centrality_loss(const TensorPtr& centrality,
                          std::optional<double> sparsity_p = std::nullopt);

struct LossWeights {
  double np = 1.0;
  double kl = 0.1;
  double sd = 1.0;
  double c = 0.001;
};

/// lambda_NP * L_NP + lambda_KL * L_KL + lambda_SD * L_SD + lambda_c * L_c.
TensorPtr total_loss(const TensorPtr& np, const TensorPtr& kl,
                     const TensorPtr& sd, const TensorPtr& c,
                     const LossWeights& weights);

struct SampledWindows {
  std::vector<int> encoder_starts;  // m entries
  int decoder_start = 0;
};

/// Uniform, independent window starts. Encoder windows satisfy
/// t_E + T_E <= T; the decoder window [t_D, t_D + T_D) likewise.
SampledWindows sample_windows(int T, int T_E, int T_D, int m, Rng& rng);

/// Fixed windows for the no-random-sampling ablation: every encoder start
/// at 0, decoder start mid-trajectory.
SampledWindows fixed_windows(int T, int T_E, int T_D, int m);

}  // namespace relatent
