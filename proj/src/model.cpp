#include "relatent/model.hpp"

#include <cmath>

#include "relatent/errors.hpp"

namespace relatent {

Model build_model(const ModelConfig& cfg, std::uint64_t init_seed) {
  if (cfg.n_nodes < 2) throw ContractError("build_model: need at least 2 nodes");
  if (cfg.gru_layers < 1) throw ContractError("build_model: need GRU layers");
  Model model;
  model.cfg = cfg;
  Rng rng = Rng::derive(init_seed, 0x1717);

  model.encoder.gru = make_gru_stack(model.params, "enc.gru", 2 * cfg.node_dim,
                                     cfg.gru_hidden, cfg.gru_layers, rng);
  model.encoder.mean_mlp = make_mlp(model.params, "enc.mean", cfg.gru_hidden,
                                    cfg.mlp_width, cfg.relation_dim, rng);
  model.encoder.logstd_mlp = make_mlp(model.params, "enc.logstd", cfg.gru_hidden,
                                      cfg.mlp_width, cfg.relation_dim, rng);
  model.encoder.centrality =
      make_linear(model.params, "enc.centrality", cfg.mlp_width, 1, rng);

  model.decoder.influence =
      make_mlp(model.params, "dec.influence", 2 * cfg.node_dim + cfg.relation_dim,
               cfg.mlp_width, cfg.influence_dim, rng);
  model.decoder.update =
      make_mlp(model.params, "dec.update", cfg.node_dim + cfg.influence_dim,
               cfg.mlp_width, cfg.node_dim, rng);
  return model;
}

EdgeIndex make_edge_index(int batch, int n_nodes) {
  if (n_nodes < 2) throw ContractError("make_edge_index: need at least 2 nodes");
  EdgeIndex index;
  index.batch = batch;
  index.n_nodes = n_nodes;
  index.n_edges = n_nodes * (n_nodes - 1);
  index.recv_rows.reserve(static_cast<std::size_t>(batch) * index.n_edges);
  index.send_rows.reserve(static_cast<std::size_t>(batch) * index.n_edges);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < n_nodes; ++i) {
      for (int j = 0; j < n_nodes; ++j) {
        if (j == i) continue;
        index.recv_rows.push_back(static_cast<Dim>(b) * n_nodes + i);
        index.send_rows.push_back(static_cast<Dim>(b) * n_nodes + j);
      }
    }
  }
  return index;
}

TensorPtr node_states_at(const BatchView& batch, int t) {
  if (t < 0 || t >= batch.steps) {
    throw ContractError("node_states_at: step " + std::to_string(t) +
                        " outside [0, " + std::to_string(batch.steps) + ")");
  }
  const int B = batch.batch();
  const int N = batch.n_nodes;
  const int d = batch.node_dim;
  std::vector<double> values(static_cast<std::size_t>(B) * N * d);
  for (int b = 0; b < B; ++b) {
    const float* src = batch.split->traj_states(batch.traj_ids[static_cast<std::size_t>(b)],
                                                batch.steps, N) +
                       static_cast<std::size_t>(t) * N * d;
    for (int k = 0; k < N * d; ++k) {
      values[static_cast<std::size_t>(b) * N * d + k] = static_cast<double>(src[k]);
    }
  }
  return make_tensor({static_cast<Dim>(B) * N, d}, std::move(values));
}

TensorPtr edge_input_at(const BatchView& batch, const EdgeIndex& index, int t) {
  const int B = batch.batch();
  const int N = batch.n_nodes;
  const int d = batch.node_dim;
  const int E = index.n_edges;
  std::vector<double> values(static_cast<std::size_t>(B) * E * 2 * d);
  for (int b = 0; b < B; ++b) {
    const float* src = batch.split->traj_states(batch.traj_ids[static_cast<std::size_t>(b)],
                                                batch.steps, N) +
                       static_cast<std::size_t>(t) * N * d;
    for (int e = 0; e < E; ++e) {
      const std::size_t row = static_cast<std::size_t>(b) * E + e;
      const Dim i = index.recv_rows[row] - static_cast<Dim>(b) * N;
      const Dim j = index.send_rows[row] - static_cast<Dim>(b) * N;
      double* dst = values.data() + row * 2 * d;
      for (int k = 0; k < d; ++k) dst[k] = static_cast<double>(src[i * d + k]);
      for (int k = 0; k < d; ++k) dst[d + k] = static_cast<double>(src[j * d + k]);
    }
  }
  return make_tensor({static_cast<Dim>(B) * E, 2 * d}, std::move(values));
}

TensorPtr encode_edges(const Model& model, const BatchView& batch,
                       const EdgeIndex& index, int t_start, int window) {
  if (window < 1) throw ContractError("encode_edges: window must be >= 1");
  if (batch.n_nodes < 2) throw ContractError("encode_edges: need >= 2 nodes");
  if (t_start < 0 || t_start + window > batch.steps) {
    throw ContractError("encode_edges: window [" + std::to_string(t_start) +
                        ", " + std::to_string(t_start + window) +
                        ") outside trajectory of " + std::to_string(batch.steps) +
                        " steps");
  }
  const Dim rows = static_cast<Dim>(batch.batch()) * index.n_edges;
  std::vector<TensorPtr> states = gru_initial_state(model.encoder.gru, rows);
  TensorPtr out;
  for (int t = t_start; t < t_start + window; ++t) {
    TensorPtr x = edge_input_at(batch, index, t);
    out = gru_stack_step(model.encoder.gru, x, states);
  }
  return out;
}

RelationHeadOut relation_head(const Model& model, const TensorPtr& edge_state,
                              Rng* rng) {
  RelationHeadOut out;
  MlpForward mean_fwd = mlp_forward_with_hidden(model.encoder.mean_mlp, edge_state);
  out.mean = mean_fwd.out;
  out.logstd = clamp(mlp_forward(model.encoder.logstd_mlp, edge_state),
                     model.cfg.logstd_min, model.cfg.logstd_max);
  out.stddev = exp_op(out.logstd);
  if (rng != nullptr) {
    std::vector<double> eps(out.mean->data.size());
    for (auto& v : eps) v = rng->normal();
    TensorPtr noise = make_tensor(out.mean->shape, std::move(eps));
    out.relation = add(out.mean, mul(out.stddev, noise));
  } else {
    out.relation = out.mean;
  }
  out.centrality = sigmoid(
      linear(mean_fwd.last_hidden, model.encoder.centrality.w,
             model.encoder.centrality.b));
  return out;
}

double noise_gate(double c, const NoiseConfig& noise, Rng& rng) {
  if (!(c > 0.0 && c < 1.0)) {
    throw ContractError("noise_gate: centrality " + std::to_string(c) +
                        " outside (0, 1)");
  }
  if (noise.mode == NoiseConfig::Mode::Off) return 1.0;
  return 1.0 + (1.0 - c) * rng.normal() * noise.sigma;
}

TensorPtr decoder_step(const Model& model, const TensorPtr& nodes,
                       const TensorPtr& relation, const TensorPtr& centrality,
                       const EdgeIndex& index, const NoiseConfig& noise,
                       Rng* rng) {
  const Dim edge_rows = static_cast<Dim>(index.batch) * index.n_edges;
  if (relation->shape[0] != edge_rows || centrality->shape[0] != edge_rows) {
    throw ContractError("decoder_step: relation/centrality rows " +
                        shape_str(relation->shape) + "/" +
                        shape_str(centrality->shape) + " do not cover " +
                        std::to_string(edge_rows) + " directed pairs");
  }
  TensorPtr recv = gather_rows(nodes, index.recv_rows);
  TensorPtr send = gather_rows(nodes, index.send_rows);
  TensorPtr message =
      mlp_forward(model.decoder.influence, concat({recv, send, relation}, 1));
  if (noise.mode == NoiseConfig::Mode::Gaussian) {
    if (rng == nullptr) {
      throw ContractError("decoder_step: Gaussian noise needs an rng");
    }
    std::vector<double> eps(static_cast<std::size_t>(edge_rows));
    for (auto& v : eps) v = rng->normal() * noise.sigma;
    TensorPtr eps_t = make_tensor({edge_rows, 1}, std::move(eps));
    // gate = 1 + (1 - c) * eps
    TensorPtr gate = affine(mul(affine(centrality, -1.0, 1.0), eps_t), 1.0, 1.0);
    message = scale_rows(message, gate);
  }
  TensorPtr aggregated =
      segment_sum(message, index.recv_rows,
                  static_cast<Dim>(index.batch) * index.n_nodes);
  TensorPtr delta =
      mlp_forward(model.decoder.update, concat({nodes, aggregated}, 1));
  return add(nodes, delta);
}

std::vector<TensorPtr> decoder_rollout(const Model& model,
                                       const TensorPtr& start,
                                       const TensorPtr& relation,
                                       const TensorPtr& centrality,
                                       const EdgeIndex& index, int horizon,
                                       const NoiseConfig& noise, Rng* rng) {
  if (horizon < 1) throw ContractError("decoder_rollout: horizon must be >= 1");
  std::vector<TensorPtr> predictions;
  predictions.reserve(static_cast<std::size_t>(horizon));
  TensorPtr nodes = start;
  for (int k = 0; k < horizon; ++k) {
    NoiseConfig step_noise = noise;
    if (noise.mode == NoiseConfig::Mode::Gaussian && !noise.fresh_per_step &&
        k > 0) {
      step_noise.mode = NoiseConfig::Mode::Off;
    }
    nodes = decoder_step(model, nodes, relation, centrality, index, step_noise,
                         rng);
    if (!nodes->all_finite()) {
      throw RolloutError("decoder_rollout: non-finite state at step " +
                         std::to_string(k + 1));
    }
    predictions.push_back(nodes);
  }
  return predictions;
}

EvalResult evaluate_split(const Model& model, const LoadedSplit& split,
                          int steps, const EvalProtocol& protocol) {
  if (protocol.observe + protocol.horizon > steps) {
    throw ContractError("evaluate_split: observe+horizon exceeds trajectory");
  }
  if (protocol.enc_window > protocol.observe) {
    throw ContractError("evaluate_split: encoder window exceeds observation");
  }
  const int N = model.cfg.n_nodes;
  EvalResult result;
  result.mse_per_step.assign(static_cast<std::size_t>(protocol.horizon), 0.0);
  double total = 0.0;
  long long count = 0;

  NoiseConfig off;
  for (int begin = 0; begin < split.n_traj; begin += protocol.batch_size) {
    const int B = std::min(protocol.batch_size, split.n_traj - begin);
    BatchView batch{&split, {}, steps, N, model.cfg.node_dim};
    for (int b = 0; b < B; ++b) batch.traj_ids.push_back(begin + b);
    EdgeIndex index = make_edge_index(B, N);

    TensorPtr edge_state = encode_edges(model, batch, index,
                                        protocol.observe - protocol.enc_window,
                                        protocol.enc_window);
    RelationHeadOut head = relation_head(model, edge_state, nullptr);
    TensorPtr start = node_states_at(batch, protocol.observe - 1);
    std::vector<TensorPtr> preds =
        decoder_rollout(model, start, head.relation, head.centrality, index,
                        protocol.horizon, off, nullptr);
    for (int k = 0; k < protocol.horizon; ++k) {
      TensorPtr truth = node_states_at(batch, protocol.observe + k);
      const double* p = preds[static_cast<std::size_t>(k)]->data.data();
      const double* q = truth->data.data();
      double acc = 0.0;
      const Dim n = truth->numel();
      for (Dim v = 0; v < n; ++v) {
        const double diff = p[v] - q[v];
        acc += diff * diff;
      }
      result.mse_per_step[static_cast<std::size_t>(k)] += acc;
      total += acc;
      count += n;
    }
  }
  const double per_step_count =
      static_cast<double>(count) / protocol.horizon;
  for (auto& v : result.mse_per_step) v /= per_step_count;
  result.mse = count > 0 ? total / static_cast<double>(count) : 0.0;
  return result;
}

RelationReadout read_relations(const Model& model, const LoadedSplit& split,
                               int steps, const EvalProtocol& protocol) {
  const int N = model.cfg.n_nodes;
  const int E = N * (N - 1);
  RelationReadout out;
  out.relation_dim = model.cfg.relation_dim;
  out.n_edges = split.n_traj * E;
  out.mean.reserve(static_cast<std::size_t>(out.n_edges) * out.relation_dim);
  out.centrality.reserve(static_cast<std::size_t>(out.n_edges));
  out.labels.reserve(static_cast<std::size_t>(out.n_edges));

  for (int begin = 0; begin < split.n_traj; begin += protocol.batch_size) {
    const int B = std::min(protocol.batch_size, split.n_traj - begin);
    BatchView batch{&split, {}, steps, N, model.cfg.node_dim};
    for (int b = 0; b < B; ++b) batch.traj_ids.push_back(begin + b);
    EdgeIndex index = make_edge_index(B, N);
    TensorPtr edge_state = encode_edges(model, batch, index,
                                        protocol.observe - protocol.enc_window,
                                        protocol.enc_window);
    RelationHeadOut head = relation_head(model, edge_state, nullptr);
    out.mean.insert(out.mean.end(), head.mean->data.begin(),
                    head.mean->data.end());
    out.centrality.insert(out.centrality.end(), head.centrality->data.begin(),
                          head.centrality->data.end());
    for (int b = 0; b < B; ++b) {
      const float* lab = split.traj_labels(begin + b, N);
      for (int e = 0; e < E; ++e) {
        out.labels.push_back(static_cast<int>(lab[e]));
      }
    }
  }
  return out;
}

}  // namespace relatent
