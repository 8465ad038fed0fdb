#include "relatent/adam.hpp"

#include <cmath>

#include "relatent/errors.hpp"

namespace relatent {

AdamOptimizer::AdamOptimizer(const ParamStore& params, double beta1,
                             double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, t] : params.items()) {
    params_.push_back(t);
    m_.emplace_back(t->data.size(), 0.0);
    v_.emplace_back(t->data.size(), 0.0);
  }
}

void AdamOptimizer::step(double lr) {
  for (const auto& p : params_) {
    if (p->grad.size() != p->data.size()) {
      throw ContractError("AdamOptimizer::step: parameter with shape " +
                          shape_str(p->shape) + " has no gradient");
    }
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    double* m = m_[i].data();
    double* v = v_[i].data();
    const double* g = p.grad.data();
    double* x = p.data.data();
    const std::size_t n = p.data.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      x[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (const auto& p : params_) p->zero_grad();
}

double one_cycle_lr(long long step, long long total_steps, double lr_max) {
  if (total_steps <= 0) throw ContractError("one_cycle_lr: total_steps <= 0");
  if (step < 0 || step >= total_steps) {
    throw ContractError("one_cycle_lr: step " + std::to_string(step) +
                        " outside [0, " + std::to_string(total_steps) + ")");
  }
  const double lr_start = lr_max / 25.0;
  const double lr_end = lr_max / 1e4;
  const long long warmup = static_cast<long long>(0.3 * static_cast<double>(total_steps));
  if (step <= warmup) {
    if (warmup == 0) return lr_max;
    const double t = static_cast<double>(step) / static_cast<double>(warmup);
    return lr_start + (lr_max - lr_start) * t;
  }
  const long long last = total_steps - 1;
  if (last == warmup) return lr_max;
  const double t =
      static_cast<double>(step - warmup) / static_cast<double>(last - warmup);
  return lr_end + (lr_max - lr_end) * 0.5 * (1.0 + std::cos(M_PI * t));
}

}  // namespace relatent
