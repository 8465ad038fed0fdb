#include "relatent/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relatent/errors.hpp"

namespace relatent {

TensorPtr node_prediction_loss(const std::vector<TensorPtr>& pred,
                               const std::vector<TensorPtr>& truth) {
  if (pred.empty() || pred.size() != truth.size()) {
    throw ShapeError("node_prediction_loss: got " + std::to_string(pred.size()) +
                     " predictions and " + std::to_string(truth.size()) +
                     " targets");
  }
  TensorPtr acc;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t]->shape != truth[t]->shape) {
      throw ShapeError("node_prediction_loss: step " + std::to_string(t) +
                       " shapes " + shape_str(pred[t]->shape) + " vs " +
                       shape_str(truth[t]->shape));
    }
    TensorPtr step = reduce_mean(square(sub(pred[t], truth[t])));
    acc = acc ? add(acc, step) : step;
  }
  return affine(acc, 1.0 / static_cast<double>(pred.size()), 0.0);
}

TensorPtr kl_loss(const TensorPtr& mean, const TensorPtr& logstd,
                  bool printed_sign) {
  if (mean->shape != logstd->shape) {
    throw ShapeError("kl_loss: mean " + shape_str(mean->shape) +
                     " vs logstd " + shape_str(logstd->shape));
  }
  // KL(N(mu, s^2) || N(0,1)) = (mu^2 + s^2 - 1 - log s^2) / 2,
  // with s^2 = exp(2*logstd).
  TensorPtr variance = exp_op(affine(logstd, 2.0, 0.0));
  TensorPtr terms = sub(add(square(mean), variance),
                        affine(logstd, 2.0, 1.0));
  TensorPtr kl = affine(reduce_mean(terms), 0.5, 0.0);
  return printed_sign ? affine(kl, -1.0, 0.0) : kl;
}

TensorPtr relation_sd_loss(const std::vector<TensorPtr>& relation_samples) {
  if (relation_samples.empty()) {
    throw ContractError("relation_sd_loss: need at least one sample");
  }
  const std::size_t m = relation_samples.size();
  const Shape& shape = relation_samples[0]->shape;
  for (const auto& r : relation_samples) {
    if (r->shape != shape) {
      throw ShapeError("relation_sd_loss: sample shapes differ, " +
                       shape_str(shape) + " vs " + shape_str(r->shape));
    }
  }
  if (m == 1) {
    // A single window has zero spread by definition.
    return scalar_tensor(0.0);
  }
  TensorPtr sum = relation_samples[0];
  for (std::size_t k = 1; k < m; ++k) sum = add(sum, relation_samples[k]);
  TensorPtr mean = affine(sum, 1.0 / static_cast<double>(m), 0.0);
  TensorPtr var;
  for (std::size_t k = 0; k < m; ++k) {
    TensorPtr dev = square(sub(relation_samples[k], mean));
    var = var ? add(var, dev) : dev;
  }
  var = affine(var, 1.0 / static_cast<double>(m), 0.0);
  return reduce_mean(sqrt_op(var));
}

TensorPtr centrality_loss(const TensorPtr& centrality,
                          std::optional<double> sparsity_p) {
  for (double v : centrality->data) {
    if (!(v > 0.0 && v < 1.0)) {
      throw ContractError("centrality_loss: value " + std::to_string(v) +
                          " outside (0, 1)");
    }
  }
  TensorPtr log_keep = log_op(affine(centrality, -1.0, 1.0));  // log(1-c)
  if (!sparsity_p.has_value()) {
    return affine(reduce_mean(log_keep), -1.0, 0.0);
  }
  const double p = *sparsity_p;
  if (p < 0.0 || p > 1.0) {
    throw ContractError("centrality_loss: sparsity prior " + std::to_string(p) +
                        " outside [0, 1]");
  }
  // delta = 1 for the lowest p-quantile of the batch, ties by index.
  const Dim n = centrality->numel();
  std::vector<Dim> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Dim a, Dim b) {
    return centrality->data[static_cast<std::size_t>(a)] <
           centrality->data[static_cast<std::size_t>(b)];
  });
  const Dim n_low = static_cast<Dim>(
      std::llround(p * static_cast<double>(n)));
  std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
  for (Dim k = 0; k < n_low && k < n; ++k) {
    delta[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1.0;
  }
  TensorPtr mask = make_tensor(centrality->shape, std::move(delta));
  TensorPtr inv_mask = affine(mask, -1.0, 1.0);
  TensorPtr log_c = log_op(centrality);
  TensorPtr terms = add(mul(mask, log_keep), mul(inv_mask, log_c));
  return affine(reduce_mean(terms), -1.0, 0.0);
}

TensorPtr total_loss(const TensorPtr& np, const TensorPtr& kl,
                     const TensorPtr& sd, const TensorPtr& c,
                     const LossWeights& weights) {
  TensorPtr acc = affine(np, weights.np, 0.0);
  acc = add(acc, affine(kl, weights.kl, 0.0));
  acc = add(acc, affine(sd, weights.sd, 0.0));
  acc = add(acc, affine(c, weights.c, 0.0));
  return acc;
}

SampledWindows sample_windows(int T, int T_E, int T_D, int m, Rng& rng) {
  if (m < 1) throw ContractError("sample_windows: m must be >= 1");
  if (T_E < 1 || T_D < 1 || T_E > T || T_D > T) {
    throw ConfigError("sample_windows: infeasible windows T=" +
                      std::to_string(T) + " T_E=" + std::to_string(T_E) +
                      " T_D=" + std::to_string(T_D));
  }
  SampledWindows windows;
  windows.encoder_starts.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    windows.encoder_starts.push_back(
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T - T_E + 1))));
  }
  windows.decoder_start =
      static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T - T_D + 1)));
  return windows;
}

SampledWindows fixed_windows(int T, int T_E, int T_D, int m) {
  if (T_E < 1 || T_D < 1 || T_E > T || T_D > T) {
    throw ConfigError("fixed_windows: infeasible windows");
  }
  SampledWindows windows;
  windows.encoder_starts.assign(static_cast<std::size_t>(m), 0);
  windows.decoder_start = (T - T_D) / 2;
  return windows;
}

}  // namespace relatent
