#pragma once

#include <cstdint>
#include <vector>

#include "relatent/data.hpp"
#include "relatent/nn.hpp"
#include "relatent/rng.hpp"
#include "relatent/tensor.hpp"

namespace relatent {

struct ModelConfig {
  int n_nodes = 5;
  int node_dim = 4;
  int gru_hidden = 32;    // edge-state width
  int gru_layers = 4;
  int mlp_width = 48;     // head hidden width
  int relation_dim = 4;   // latent relation width
  int influence_dim = 24; // pairwise message width
  double logstd_min = -7.0;
  double logstd_max = 2.0;

  int edges() const { return n_nodes * (n_nodes - 1); }
};

/// Recurrent edge summarizer plus the three heads: posterior mean,
/// posterior log-std (parallel net) and centrality (shares the mean net's
/// hidden stack, one extra linear layer).
struct EncoderParams {
  GruStackParams gru;
  MlpParams mean_mlp;
  MlpParams logstd_mlp;
  LinearParams centrality;
};

struct DecoderNetParams {
  MlpParams influence;  // (n_i, n_j, r_ij) -> message
  MlpParams update;     // (n_i, aggregated message) -> state delta
};

struct Model {
  ModelConfig cfg;
  ParamStore params;
  EncoderParams encoder;
  DecoderNetParams decoder;
};

Model build_model(const ModelConfig& cfg, std::uint64_t init_seed);

/// Row bookkeeping for a batch of B samples with N nodes each: node row
/// b*N+i, edge row b*E+e with directed edges ordered by ascending receiver
/// then sender.
struct EdgeIndex {
  int batch = 0;
  int n_nodes = 0;
  int n_edges = 0;                // per sample
  std::vector<Dim> recv_rows;     // [batch * n_edges]
  std::vector<Dim> send_rows;
};

EdgeIndex make_edge_index(int batch, int n_nodes);

/// A batch of trajectories referencing a loaded split.
struct BatchView {
  const LoadedSplit* split = nullptr;
  std::vector<int> traj_ids;
  int steps = 0;     // T
  int n_nodes = 0;
  int node_dim = 4;

  int batch() const { return static_cast<int>(traj_ids.size()); }
};

/// Leaf [B*N, node_dim] with every node's state at time t.
TensorPtr node_states_at(const BatchView& batch, int t);

/// Leaf [B*E, 2*node_dim]: receiver state followed by sender state.
TensorPtr edge_input_at(const BatchView& batch, const EdgeIndex& index, int t);

/// Runs the GRU stack over [t_start, t_start + window) and returns the
/// final edge state [B*E, gru_hidden].
TensorPtr encode_edges(const Model& model, const BatchView& batch,
                       const EdgeIndex& index, int t_start, int window);

struct RelationHeadOut {
  TensorPtr mean;        // [B*E, d_r]
  TensorPtr logstd;      // clamped
  TensorPtr stddev;      // exp(logstd), strictly positive
  TensorPtr relation;    // sampled in training, == mean in eval
  TensorPtr centrality;  // [B*E, 1], sigmoid output
};

/// Posterior + centrality from an edge state. When `rng` is null the
/// relation state is the posterior mean (deterministic mode).
RelationHeadOut relation_head(const Model& model, const TensorPtr& edge_state,
                              Rng* rng);

struct NoiseConfig {
  enum class Mode { Off, Gaussian };
  Mode mode = Mode::Off;
  double sigma = 1.0;
  bool fresh_per_step = true;
};

/// Scalar influence gate: 1 + (1 - c) * eps.
double noise_gate(double c, const NoiseConfig& noise, Rng& rng);

/// One residual prediction step for every node in the batch.
TensorPtr decoder_step(const Model& model, const TensorPtr& nodes,
                       const TensorPtr& relation, const TensorPtr& centrality,
                       const EdgeIndex& index, const NoiseConfig& noise,
                       Rng* rng);

/// Closed-loop rollout; element k is the prediction for step k+1 after
/// `start`. Throws RolloutError on a non-finite intermediate state.
std::vector<TensorPtr> decoder_rollout(const Model& model,
                                       const TensorPtr& start,
                                       const TensorPtr& relation,
                                       const TensorPtr& centrality,
                                       const EdgeIndex& index, int horizon,
                                       const NoiseConfig& noise, Rng* rng);

struct EvalProtocol {
  int observe = 49;   // steps shown to the encoder
  int horizon = 50;   // closed-loop prediction length
  int enc_window = 10;  // encoder window length (last part of observation)
  int batch_size = 50;
};

struct EvalResult {
  double mse = 0.0;
  std::vector<double> mse_per_step;
};

/// Deterministic evaluation: encode the tail of the observed prefix,
/// roll out the remaining steps, report MSE in normalized units.
EvalResult evaluate_split(const Model& model, const LoadedSplit& split,
                          int steps, const EvalProtocol& protocol);

/// Deterministic per-edge readout over a whole split, for clustering and
/// reports: posterior means and centralities.
struct RelationReadout {
  int n_edges = 0;       // total rows
  int relation_dim = 0;
  std::vector<double> mean;        // [n_edges * relation_dim]
  std::vector<double> centrality;  // [n_edges]
  std::vector<int> labels;         // ground-truth ids, from the split
};

RelationReadout read_relations(const Model& model, const LoadedSplit& split,
                               int steps, const EvalProtocol& protocol);

}  // namespace relatent
