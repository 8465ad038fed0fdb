#include "relatent/nn.hpp"

#include <cmath>

#include "relatent/errors.hpp"

namespace relatent {

TensorPtr ParamStore::add(const std::string& name, Shape shape,
                          std::vector<double> values) {
  if (index_.count(name)) {
    throw ContractError("ParamStore: duplicate parameter name '" + name + "'");
  }
  auto t = make_tensor(std::move(shape), std::move(values), true);
  index_[name] = items_.size();
  items_.emplace_back(name, t);
  return t;
}

TensorPtr ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("ParamStore: unknown parameter '" + name + "'");
  }
  return items_[it->second].second;
}

Dim ParamStore::scalar_count() const {
  Dim n = 0;
  for (const auto& [name, t] : items_) n += t->numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : items_) t->zero_grad();
}

bool ParamStore::grads_populated() const {
  for (const auto& [name, t] : items_) {
    if (t->grad.size() != t->data.size()) return false;
  }
  return true;
}

std::vector<double> init_uniform_fan_in(Dim fan_in, Dim count, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> values(static_cast<std::size_t>(count));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return values;
}

LinearParams make_linear(ParamStore& store, const std::string& prefix,
                         Dim in_dim, Dim out_dim, Rng& rng) {
  LinearParams p;
  p.w = store.add(prefix + ".w", {out_dim, in_dim},
                  init_uniform_fan_in(in_dim, out_dim * in_dim, rng));
  p.b = store.add(prefix + ".b", {out_dim},
                  std::vector<double>(static_cast<std::size_t>(out_dim), 0.0));
  return p;
}

MlpParams make_mlp(ParamStore& store, const std::string& prefix, Dim in_dim,
                   Dim hidden, Dim out_dim, Rng& rng, int n_layers) {
  if (n_layers < 2) throw ContractError("make_mlp: need at least 2 layers");
  MlpParams mlp;
  Dim d = in_dim;
  for (int l = 0; l < n_layers - 1; ++l) {
    mlp.layers.push_back(
        make_linear(store, prefix + ".l" + std::to_string(l), d, hidden, rng));
    d = hidden;
  }
  mlp.layers.push_back(make_linear(
      store, prefix + ".l" + std::to_string(n_layers - 1), d, out_dim, rng));
  return mlp;
}

MlpForward mlp_forward_with_hidden(const MlpParams& mlp, const TensorPtr& x) {
  TensorPtr h = x;
  for (std::size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    TensorPtr a = relu(linear(h, layer.w, layer.b));
    // Identity bypass wherever widths allow it.
    if (layer.w->shape[0] == layer.w->shape[1]) a = add(a, h);
    h = a;
  }
  const auto& last = mlp.layers.back();
  return {linear(h, last.w, last.b), h};
}

TensorPtr mlp_forward(const MlpParams& mlp, const TensorPtr& x) {
  return mlp_forward_with_hidden(mlp, x).out;
}

GruLayerParams make_gru_layer(ParamStore& store, const std::string& prefix,
                              Dim in_dim, Dim hidden, Rng& rng) {
  GruLayerParams p;
  p.in_dim = in_dim;
  p.hidden = hidden;
  auto weight = [&](const std::string& name, Dim rows, Dim cols, Dim fan_in) {
    return store.add(prefix + "." + name, {rows, cols},
                     init_uniform_fan_in(fan_in, rows * cols, rng));
  };
  auto bias = [&](const std::string& name) {
    return store.add(prefix + "." + name, {hidden},
                     std::vector<double>(static_cast<std::size_t>(hidden), 0.0));
  };
  p.w_z = weight("w_z", hidden, in_dim, in_dim);
  p.u_z = weight("u_z", hidden, hidden, hidden);
  p.b_z = bias("b_z");
  p.w_r = weight("w_r", hidden, in_dim, in_dim);
  p.u_r = weight("u_r", hidden, hidden, hidden);
  p.b_r = bias("b_r");
  p.w_h = weight("w_h", hidden, in_dim, in_dim);
  p.u_h = weight("u_h", hidden, hidden, hidden);
  p.b_h = bias("b_h");
  return p;
}

TensorPtr gru_step(const GruLayerParams& block, const TensorPtr& x,
                   const TensorPtr& s_prev) {
  if (x->shape.size() != 2 || x->shape[1] != block.in_dim ||
      s_prev->shape.size() != 2 || s_prev->shape[1] != block.hidden ||
      x->shape[0] != s_prev->shape[0]) {
    throw ContractError("gru_step: input " + shape_str(x->shape) + ", state " +
                        shape_str(s_prev->shape) + " do not fit block (in=" +
                        std::to_string(block.in_dim) + ", hidden=" +
                        std::to_string(block.hidden) + ")");
  }
  TensorPtr z = sigmoid(linear2(x, block.w_z, s_prev, block.u_z, block.b_z));
  TensorPtr r = sigmoid(linear2(x, block.w_r, s_prev, block.u_r, block.b_r));
  TensorPtr rs = mul(r, s_prev);
  TensorPtr cand = tanh_op(linear2(x, block.w_h, rs, block.u_h, block.b_h));
  TensorPtr keep = mul(affine(z, -1.0, 1.0), s_prev);
  return add(keep, mul(z, cand));
}

GruStackParams make_gru_stack(ParamStore& store, const std::string& prefix,
                              Dim in_dim, Dim hidden, int n_layers, Rng& rng) {
  GruStackParams stack;
  Dim d = in_dim;
  for (int l = 0; l < n_layers; ++l) {
    stack.layers.push_back(
        make_gru_layer(store, prefix + "." + std::to_string(l), d, hidden, rng));
    d = hidden;
  }
  return stack;
}

TensorPtr gru_stack_step(const GruStackParams& stack, const TensorPtr& x,
                         std::vector<TensorPtr>& states) {
  if (states.size() != stack.layers.size()) {
    throw ContractError("gru_stack_step: expected " +
                        std::to_string(stack.layers.size()) + " states, got " +
                        std::to_string(states.size()));
  }
  TensorPtr input = x;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    states[l] = gru_step(stack.layers[l], input, states[l]);
    input = states[l];
  }
  return input;
}

std::vector<TensorPtr> gru_initial_state(const GruStackParams& stack, Dim rows) {
  std::vector<TensorPtr> states;
  states.reserve(stack.layers.size());
  for (const auto& layer : stack.layers) {
    states.push_back(zeros({rows, layer.hidden}));
  }
  return states;
}

}  // namespace relatent
