#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relatent/rng.hpp"

namespace relatent {

enum class RelationKind { None, Spring, Gravity };

std::string relation_kind_name(RelationKind kind);

/// One pairwise interaction. `coefficient` is the force strength; a None
/// relation always carries coefficient 0.
struct RelationSpec {
  RelationKind kind = RelationKind::None;
  double coefficient = 0.0;
  double rest_length = 1.0;  // springs only
  int label = 0;             // index into the dataset vocabulary
};

/// Complete directed relation map over i != j. Forces are mutual, so the
/// map is symmetric by construction: spec(i,j) == spec(j,i).
struct RelationGraph {
  int n_nodes = 0;
  std::vector<RelationSpec> relations;  // [n*(n-1)], pair_index order

  /// Directed pairs ordered by ascending receiver i, then sender j != i.
  static int pair_index(int n, int i, int j);

  const RelationSpec& at(int i, int j) const;
  RelationSpec& at(int i, int j);

  /// Assigns both (i,j) and (j,i).
  void set_symmetric(int i, int j, const RelationSpec& spec);
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Node state time series. Raw simulator units (no normalization); each
/// state row is (x, y, vx, vy).
struct Trajectory {
  int n_nodes = 0;
  int n_steps = 0;  // number of stored states
  double dt = 0.0;  // stored-state interval
  std::vector<double> states;  // [n_steps * n_nodes * 4]
  RelationGraph graph;

  double* state(int t) { return states.data() + static_cast<std::size_t>(t) * n_nodes * 4; }
  const double* state(int t) const {
    return states.data() + static_cast<std::size_t>(t) * n_nodes * 4;
  }
};

struct SimConfig {
  int n_nodes = 5;
  int steps = 99;        // stored states per trajectory
  double dt = 0.1;       // stored-state interval
  int substeps = 10;     // leapfrog substeps per stored interval
  double box_half = 2.0;     // initial positions ~ U(-box_half, box_half)^2
  double vel_scale = 0.5;    // initial velocities ~ N(0,1) * vel_scale
  double softening = 1e-2;   // minimum effective pair distance
  double diverge_bound = 1e4;
  double spring_k = 1.0;     // moderate spring strength
  double gravity_k = 1.0;    // moderate gravity strength
  double spring_rest = 1.0;
  double grid_min = 0.1;     // coefficient grid for the 100-type combos
  double grid_max = 2.0;
  int grid_size = 100;
};

/// A dataset vocabulary entry: one (kind, coefficient) relation type.
struct RelationType {
  std::string name;
  RelationKind kind = RelationKind::None;
  double coefficient = 0.0;
  double rest_length = 1.0;
};

/// The eight relation-type combinations, keyed 'a'..'h'.
std::vector<RelationType> combo_vocabulary(char combo, const SimConfig& cfg);
bool combo_valid(char combo);

struct GenerationStats {
  long long retries = 0;
  long long softening_events = 0;
};

/// Force on node i exerted by node j. Distances below the softening
/// radius are clamped; `softened`, when given, is set on clamping.
Vec2 pair_force(const RelationSpec& spec, const Vec2& pos_i, const Vec2& pos_j,
                double softening, bool* softened = nullptr);

/// Velocity-Verlet integration of `steps` stored intervals; the returned
/// trajectory contains steps+1 states including the initial one.
/// Throws DivergenceError when the state leaves the allowed bounds.
Trajectory integrate(const RelationGraph& graph,
                     const std::vector<double>& initial, double dt, int steps,
                     const SimConfig& cfg, GenerationStats* stats = nullptr);

/// Raw (unnormalized) generated dataset, pre-serialization.
struct RawDataset {
  char combo = 'a';
  std::uint64_t seed = 0;
  SimConfig cfg;
  std::vector<RelationType> vocabulary;
  std::vector<Trajectory> train, valid, test;
  GenerationStats stats;
};

/// Deterministic generation: every trajectory draws its own stream from
/// (seed, split, index, attempt), so generation order never changes the
/// result.
RawDataset generate_dataset(char combo, int n_train, int n_valid, int n_test,
                            std::uint64_t seed, const SimConfig& cfg);

}  // namespace relatent
