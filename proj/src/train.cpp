#include "relatent/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "relatent/binio.hpp"
#include "relatent/checkpoint.hpp"
#include "relatent/errors.hpp"
#include "relatent/losses.hpp"

namespace relatent {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void clip_gradients(ParamStore& params, double max_norm) {
  double norm_sq = 0.0;
  for (const auto& [name, t] : params.items()) {
    for (double g : t->grad) norm_sq += g * g;
  }
  const double norm = std::sqrt(norm_sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& [name, t] : params.items()) {
    for (double& g : t->grad) g *= scale;
  }
}

void validate_training_config(const TrainingConfig& cfg,
                              const LoadedDataset& data) {
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.m < 1) {
    throw ConfigError("train: epochs, batch_size and m must be positive");
  }
  if (cfg.dec_window < 2) {
    throw ConfigError("train: decoder window needs at least 2 states");
  }
  if (cfg.enc_window > data.steps || cfg.dec_window > data.steps) {
    throw ConfigError("train: window exceeds trajectory length " +
                      std::to_string(data.steps));
  }
  if (data.train.n_traj < 1) throw ConfigError("train: empty training split");
}

}  // namespace

BatchLossParts train_batch(Model& model, const LoadedDataset& data,
                           const std::vector<int>& traj_ids,
                           const TrainingConfig& cfg, AdamOptimizer& opt,
                           double lr, Rng& rng) {
  const int B = static_cast<int>(traj_ids.size());
  BatchView batch{&data.train, traj_ids, data.steps, data.n_nodes,
                  data.node_dim};
  EdgeIndex index = make_edge_index(B, data.n_nodes);

  // Without the spread penalty only the decoder window matters, so the
  // extra encoder passes would be wasted work.
  const int m_eff = cfg.lambda_sd == 0.0 ? 1 : cfg.m;
  SampledWindows windows =
      cfg.random_sampling
          ? sample_windows(data.steps, cfg.enc_window, cfg.dec_window, m_eff, rng)
          : fixed_windows(data.steps, cfg.enc_window, cfg.dec_window, m_eff);

  Tape tape;
  TapeScope scope(tape);

  std::vector<TensorPtr> relation_samples;
  RelationHeadOut designated;
  for (int k = 0; k < m_eff; ++k) {
    TensorPtr edge_state = encode_edges(model, batch, index,
                                        windows.encoder_starts[static_cast<std::size_t>(k)],
                                        cfg.enc_window);
    RelationHeadOut head = relation_head(model, edge_state, &rng);
    relation_samples.push_back(head.relation);
    if (k == 0) designated = head;
  }

  const int horizon = cfg.dec_window - 1;
  TensorPtr start = node_states_at(batch, windows.decoder_start);
  std::vector<TensorPtr> preds =
      decoder_rollout(model, start, designated.relation, designated.centrality,
                      index, horizon, cfg.noise, &rng);
  std::vector<TensorPtr> truths;
  truths.reserve(static_cast<std::size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    truths.push_back(node_states_at(batch, windows.decoder_start + k));
  }

  TensorPtr np = node_prediction_loss(preds, truths);
  TensorPtr kl = kl_loss(designated.mean, designated.logstd, cfg.kl_printed_sign);
  TensorPtr sd = relation_sd_loss(relation_samples);
  TensorPtr c_loss = centrality_loss(designated.centrality, cfg.sparsity_p);
  LossWeights weights{cfg.lambda_np, cfg.lambda_kl, cfg.lambda_sd, cfg.lambda_c};
  TensorPtr total = total_loss(np, kl, sd, c_loss, weights);

  BatchLossParts parts;
  parts.np = np->scalar_value();
  parts.kl = kl->scalar_value();
  parts.sd = sd->scalar_value();
  parts.c = c_loss->scalar_value();
  parts.total = total->scalar_value();
  if (!std::isfinite(parts.total)) {
    throw Error("train: non-finite loss (np=" + std::to_string(parts.np) +
                ", kl=" + std::to_string(parts.kl) + ", sd=" +
                std::to_string(parts.sd) + ", c=" + std::to_string(parts.c) +
                ", lr=" + std::to_string(lr) + ", first traj " +
                std::to_string(traj_ids.empty() ? -1 : traj_ids[0]) + ")");
  }

  model.params.zero_grad();
  tape.backward(total);
  if (cfg.grad_clip > 0.0) clip_gradients(model.params, cfg.grad_clip);
  opt.step(lr);
  return parts;
}

TrainResult train_model(Model& model, const LoadedDataset& data,
                        const TrainingConfig& cfg, const EvalProtocol& eval,
                        const std::string& run_dir, bool resume) {
  validate_training_config(cfg, data);
  const int n_train = data.train.n_traj;
  const int batches_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const long long total_steps =
      static_cast<long long>(cfg.epochs) * batches_per_epoch;

  AdamOptimizer opt(model.params);
  Rng shuffle_rng = Rng::derive(cfg.seed, 0x5F1E);
  Rng loop_rng = Rng::derive(cfg.seed, 0x1009);

  TrainResult result;
  result.best_val = std::numeric_limits<double>::max();
  int start_epoch = 0;
  long long global_step = 0;

  const std::string state_path = run_dir + "/train_state.json";
  if (!run_dir.empty()) fs::create_directories(run_dir);
  if (resume && !run_dir.empty() && fs::exists(state_path)) {
    json state;
    {
      auto in = open_in(state_path, false);
      in >> state;
    }
    load_params(model.params, run_dir + "/ckpt_last");
    load_optimizer(opt, model.params, run_dir + "/ckpt_last");
    start_epoch = state.at("epoch").get<int>() + 1;
    global_step = state.at("global_step").get<long long>();
    result.best_val = state.at("best_val").get<double>();
    result.best_epoch = state.at("best_epoch").get<int>();
    shuffle_rng = Rng::deserialize(state.at("shuffle_rng").get<std::string>());
    loop_rng = Rng::deserialize(state.at("loop_rng").get<std::string>());
  }

  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates on the dedicated stream.
    for (int i = n_train - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    for (int b = 0; b < batches_per_epoch; ++b) {
      const int begin = b * cfg.batch_size;
      const int end = std::min(n_train, begin + cfg.batch_size);
      std::vector<int> ids(order.begin() + begin, order.begin() + end);
      const double lr = one_cycle_lr(global_step, total_steps, cfg.lr_max);
      BatchLossParts parts;
      try {
        parts = train_batch(model, data, ids, cfg, opt, lr, loop_rng);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " [epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(b) + "]");
      }
      ++global_step;
      metrics.lr = lr;
      metrics.loss_np += parts.np;
      metrics.loss_kl += parts.kl;
      metrics.loss_sd += parts.sd;
      metrics.loss_c += parts.c;
      metrics.loss_total += parts.total;
    }
    metrics.loss_np /= batches_per_epoch;
    metrics.loss_kl /= batches_per_epoch;
    metrics.loss_sd /= batches_per_epoch;
    metrics.loss_c /= batches_per_epoch;
    metrics.loss_total /= batches_per_epoch;

    metrics.val_mse =
        data.valid.n_traj > 0
            ? evaluate_split(model, data.valid, data.steps, eval).mse
            : metrics.loss_np;
    result.history.push_back(metrics);

    const bool improved = metrics.val_mse < result.best_val;
    if (improved) {
      result.best_val = metrics.val_mse;
      result.best_epoch = epoch;
    }

    if (!run_dir.empty()) {
      json line = {{"epoch", metrics.epoch},
                   {"lr", metrics.lr},
                   {"loss_np", metrics.loss_np},
                   {"loss_kl", metrics.loss_kl},
                   {"loss_sd", metrics.loss_sd},
                   {"loss_c", metrics.loss_c},
                   {"loss_total", metrics.loss_total},
                   {"val_mse", metrics.val_mse}};
      std::ofstream log(run_dir + "/metrics.jsonl", std::ios::app);
      log << line.dump() << "\n";

      save_params(model.params, run_dir + "/ckpt_last");
      save_optimizer(opt, model.params, run_dir + "/ckpt_last");
      if (improved) save_params(model.params, run_dir + "/ckpt_best");
      json state = {{"epoch", epoch},
                    {"global_step", global_step},
                    {"best_val", result.best_val},
                    {"best_epoch", result.best_epoch},
                    {"shuffle_rng", shuffle_rng.serialize()},
                    {"loop_rng", loop_rng.serialize()}};
      auto out = open_out(state_path, false);
      out << state.dump(2) << "\n";
    }
  }
  return result;
}

}  // namespace relatent
