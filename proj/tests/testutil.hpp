#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "relatent/tensor.hpp"

namespace relatent::testutil {

/// Central-difference gradient check. `fn` rebuilds the scalar loss from
/// the current leaf values; it must be deterministic. Returns the worst
/// relative error over every element of every leaf.
inline double max_grad_rel_err(const std::vector<TensorPtr>& leaves,
                               const std::function<TensorPtr()>& fn,
                               double step = 1e-5) {
  for (const auto& leaf : leaves) leaf->grad.clear();
  Tape tape;
  {
    TapeScope scope(tape);
    TensorPtr root = fn();
    tape.backward(root);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    leaf->ensure_grad();
    analytic.push_back(leaf->grad);
  }

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& leaf = *leaves[li];
    for (std::size_t j = 0; j < leaf.data.size(); ++j) {
      const double original = leaf.data[j];
      leaf.data[j] = original + step;
      const double up = fn()->scalar_value();
      leaf.data[j] = original - step;
      const double down = fn()->scalar_value();
      leaf.data[j] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[li][j];
      const double err = std::abs(exact - numeric) /
                         std::max({1.0, std::abs(exact), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Unique scratch directory under the system temp path.
inline std::string scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("relatent_" + tag + "_" + std::to_string(counter++) + "_" +
              std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace relatent::testutil
