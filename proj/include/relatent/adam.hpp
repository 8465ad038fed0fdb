#pragma once

#include <vector>

#include "relatent/nn.hpp"
#include "relatent/tensor.hpp"

namespace relatent {

/// Adam with bias correction. First/second moments are kept per parameter
/// in registration order and survive across steps (and checkpoints).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const ParamStore& params, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);

  /// One update from the gradients currently on the parameters.
  /// Every parameter must have a populated gradient buffer.
  void step(double lr);

  void zero_grad();

  long long step_count() const { return step_count_; }

  // Moment access for checkpointing.
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  void set_step_count(long long t) { step_count_ = t; }

  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double beta1_, beta2_, eps_;
  long long step_count_ = 0;
};

/// One-cycle schedule: linear warm-up from lr_max/25 to lr_max over the
/// first 30% of steps, then cosine decay to lr_max/1e4.
double one_cycle_lr(long long step, long long total_steps, double lr_max);

}  // namespace relatent
