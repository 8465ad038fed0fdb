#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relatent/sim.hpp"

namespace relatent {

/// Per-channel (x, y, vx, vy) affine normalization fitted on the train split.
struct Normalization {
  std::array<double, 4> mean{0, 0, 0, 0};
  std::array<double, 4> std{1, 1, 1, 1};
};

/// One split loaded from disk: normalized f32 states plus relation labels
/// for every directed pair (ascending receiver i, then sender j != i).
struct LoadedSplit {
  int n_traj = 0;
  std::vector<float> states;  // [n_traj * T * N * 4]
  std::vector<float> labels;  // [n_traj * N * (N-1)]

  const float* traj_states(int s, int T, int n_nodes) const {
    return states.data() + static_cast<std::size_t>(s) * T * n_nodes * 4;
  }
  const float* traj_labels(int s, int n_nodes) const {
    return labels.data() + static_cast<std::size_t>(s) * n_nodes * (n_nodes - 1);
  }
};

struct LoadedDataset {
  char combo = 'a';
  std::uint64_t seed = 0;
  int n_nodes = 0;
  int steps = 0;     // T
  int node_dim = 4;
  double dt = 0.0;
  Normalization norm;
  std::vector<RelationType> vocabulary;
  LoadedSplit train, valid, test;
};

Normalization fit_normalization(const std::vector<Trajectory>& train);

/// Writes manifest.json plus {train,valid,test}_{states,labels}.bin
/// (little-endian f32). States are stored normalized.
void write_dataset(const RawDataset& ds, const std::string& dir);

LoadedDataset load_dataset(const std::string& dir);

}  // namespace relatent
