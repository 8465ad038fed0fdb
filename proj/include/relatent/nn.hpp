#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relatent/rng.hpp"
#include "relatent/tensor.hpp"

namespace relatent {

/// Ordered registry of named trainable tensors. Registration order is the
/// canonical order for checkpoints and optimizer state.
class ParamStore {
 public:
  TensorPtr add(const std::string& name, Shape shape,
                std::vector<double> values);
  TensorPtr find(const std::string& name) const;

  const std::vector<std::pair<std::string, TensorPtr>>& items() const {
    return items_;
  }
  std::size_t count() const { return items_.size(); }
  Dim scalar_count() const;

  void zero_grad();
  bool grads_populated() const;

 private:
  std::vector<std::pair<std::string, TensorPtr>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Fan-in scaled uniform initialization; biases start at zero.
std::vector<double> init_uniform_fan_in(Dim fan_in, Dim count, Rng& rng);

struct LinearParams {
  TensorPtr w;  // [out, in]
  TensorPtr b;  // [out]
};

LinearParams make_linear(ParamStore& store, const std::string& prefix,
                         Dim in_dim, Dim out_dim, Rng& rng);

/// Four-layer perceptron, ReLU hidden activations, linear last layer.
/// Hidden layers whose input and output widths match add an identity
/// bypass (skip connection).
struct MlpParams {
  std::vector<LinearParams> layers;
};

MlpParams make_mlp(ParamStore& store, const std::string& prefix, Dim in_dim,
                   Dim hidden, Dim out_dim, Rng& rng, int n_layers = 4);

TensorPtr mlp_forward(const MlpParams& mlp, const TensorPtr& x);

/// Forward pass that also returns the activation entering the last layer,
/// for heads sharing the hidden stack.
struct MlpForward {
  TensorPtr out;
  TensorPtr last_hidden;
};

MlpForward mlp_forward_with_hidden(const MlpParams& mlp, const TensorPtr& x);

/// One gated recurrent block: update gate z, reset gate r, candidate state.
struct GruLayerParams {
  TensorPtr w_z, u_z, b_z;
  TensorPtr w_r, u_r, b_r;
  TensorPtr w_h, u_h, b_h;
  Dim in_dim = 0;
  Dim hidden = 0;
};

GruLayerParams make_gru_layer(ParamStore& store, const std::string& prefix,
                              Dim in_dim, Dim hidden, Rng& rng);

/// s' = (1-z) * s + z * tanh(W_h x + U_h (r * s) + b_h)
TensorPtr gru_step(const GruLayerParams& block, const TensorPtr& x,
                   const TensorPtr& s_prev);

/// Stack of GRU blocks; layer l >= 2 consumes the output of layer l-1.
struct GruStackParams {
  std::vector<GruLayerParams> layers;
};

GruStackParams make_gru_stack(ParamStore& store, const std::string& prefix,
                              Dim in_dim, Dim hidden, int n_layers, Rng& rng);

/// Runs one time step through every layer; `states` holds one hidden state
/// per layer and is replaced with the new states. Returns the last layer's
/// output.
TensorPtr gru_stack_step(const GruStackParams& stack, const TensorPtr& x,
                         std::vector<TensorPtr>& states);

/// Zero initial hidden states for `rows` parallel sequences.
std::vector<TensorPtr> gru_initial_state(const GruStackParams& stack, Dim rows);

}  // namespace relatent
