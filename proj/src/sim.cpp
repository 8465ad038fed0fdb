#include "relatent/sim.hpp"

#include <cmath>
#include <cstdio>

#include "relatent/errors.hpp"

namespace relatent {

std::string relation_kind_name(RelationKind kind) {
  switch (kind) {
    case RelationKind::None: return "none";
    case RelationKind::Spring: return "spring";
    case RelationKind::Gravity: return "gravity";
  }
  return "?";
}

int RelationGraph::pair_index(int n, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    throw ContractError("RelationGraph: bad pair (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") for n=" + std::to_string(n));
  }
  return i * (n - 1) + (j < i ? j : j - 1);
}

const RelationSpec& RelationGraph::at(int i, int j) const {
  return relations[static_cast<std::size_t>(pair_index(n_nodes, i, j))];
}

RelationSpec& RelationGraph::at(int i, int j) {
  return relations[static_cast<std::size_t>(pair_index(n_nodes, i, j))];
}

void RelationGraph::set_symmetric(int i, int j, const RelationSpec& spec) {
  at(i, j) = spec;
  at(j, i) = spec;
}

bool combo_valid(char combo) { return combo >= 'a' && combo <= 'h'; }

namespace {

RelationType none_type() { return {"none", RelationKind::None, 0.0, 1.0}; }

RelationType spring_type(const std::string& name, double k, double rest) {
  return {name, RelationKind::Spring, k, rest};
}

RelationType gravity_type(const std::string& name, double k) {
  return {name, RelationKind::Gravity, k, 1.0};
}

std::vector<RelationType> grid_types(const char* prefix, RelationKind kind,
                                     const SimConfig& cfg) {
  std::vector<RelationType> types;
  for (int g = 0; g < cfg.grid_size; ++g) {
    const double t = cfg.grid_size > 1
                         ? static_cast<double>(g) / (cfg.grid_size - 1)
                         : 0.0;
    const double k = cfg.grid_min + (cfg.grid_max - cfg.grid_min) * t;
    char name[32];
    std::snprintf(name, sizeof(name), "%s_%03d", prefix, g);
    if (kind == RelationKind::Spring) {
      types.push_back(spring_type(name, k, cfg.spring_rest));
    } else {
      types.push_back(gravity_type(name, k));
    }
  }
  return types;
}

}  // namespace

std::vector<RelationType> combo_vocabulary(char combo, const SimConfig& cfg) {
  const double ks = cfg.spring_k;
  const double kg = cfg.gravity_k;
  const double rest = cfg.spring_rest;
  switch (combo) {
    case 'a':
      return {spring_type("spring", ks, rest), none_type()};
    case 'b':
      return {spring_type("spring", ks, rest), gravity_type("gravity", kg)};
    case 'c':
      return {gravity_type("gravity", kg), none_type()};
    case 'd':
      return {spring_type("spring", ks, rest), gravity_type("gravity", kg),
              none_type()};
    case 'e':
      // weak : moderate : strong = 1 : 2 : 4
      return {none_type(), spring_type("spring_weak", 0.5 * ks, rest),
              spring_type("spring_moderate", ks, rest),
              spring_type("spring_strong", 2.0 * ks, rest)};
    case 'f':
      return {none_type(), gravity_type("gravity_weak", 0.5 * kg),
              gravity_type("gravity_moderate", kg),
              gravity_type("gravity_strong", 2.0 * kg)};
    case 'g':
      return grid_types("spring", RelationKind::Spring, cfg);
    case 'h': {
      auto types = grid_types("spring", RelationKind::Spring, cfg);
      auto grav = grid_types("gravity", RelationKind::Gravity, cfg);
      types.insert(types.end(), grav.begin(), grav.end());
      return types;
    }
    default:
      throw ConfigError(std::string("unknown relation combo '") + combo +
                        "' (expected a..h)");
  }
}

Vec2 pair_force(const RelationSpec& spec, const Vec2& pos_i, const Vec2& pos_j,
                double softening, bool* softened) {
  if (spec.kind == RelationKind::None) return {0.0, 0.0};
  const double dx = pos_j.x - pos_i.x;
  const double dy = pos_j.y - pos_i.y;
  const double r = std::hypot(dx, dy);
  double r_eff = r;
  if (r < softening) {
    r_eff = softening;
    if (softened) *softened = true;
  }
  // Positive magnitude points toward j.
  double magnitude = 0.0;
  if (spec.kind == RelationKind::Spring) {
    magnitude = spec.coefficient * (r_eff - spec.rest_length);
  } else {
    magnitude = spec.coefficient / r_eff;
  }
  if (r <= 0.0) return {0.0, 0.0};  // coincident points: no defined direction
  return {magnitude * (dx / r_eff), magnitude * (dy / r_eff)};
}

namespace {

/// Accumulates forces for all nodes; one evaluation per unordered pair so
/// the total is zero to rounding error.
void accumulate_forces(const RelationGraph& graph,
                       const std::vector<double>& pos_vel,
                       std::vector<double>& force, double softening,
                       long long* softening_events) {
  const int n = graph.n_nodes;
  std::fill(force.begin(), force.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec2 pi{pos_vel[static_cast<std::size_t>(i) * 4],
                  pos_vel[static_cast<std::size_t>(i) * 4 + 1]};
    for (int j = i + 1; j < n; ++j) {
      const Vec2 pj{pos_vel[static_cast<std::size_t>(j) * 4],
                    pos_vel[static_cast<std::size_t>(j) * 4 + 1]};
      bool softened = false;
      const Vec2 f = pair_force(graph.at(i, j), pi, pj, softening, &softened);
      if (softened && softening_events) ++*softening_events;
      force[static_cast<std::size_t>(i) * 2] += f.x;
      force[static_cast<std::size_t>(i) * 2 + 1] += f.y;
      force[static_cast<std::size_t>(j) * 2] -= f.x;
      force[static_cast<std::size_t>(j) * 2 + 1] -= f.y;
    }
  }
}

}  // namespace

Trajectory integrate(const RelationGraph& graph,
                     const std::vector<double>& initial, double dt, int steps,
                     const SimConfig& cfg, GenerationStats* stats) {
  const int n = graph.n_nodes;
  if (static_cast<int>(initial.size()) != n * 4) {
    throw ContractError("integrate: initial state has " +
                        std::to_string(initial.size()) + " values, expected " +
                        std::to_string(n * 4));
  }
  if (!(dt > 0.0)) throw ContractError("integrate: dt must be positive");
  for (double v : initial) {
    if (!std::isfinite(v)) throw ContractError("integrate: non-finite initial state");
  }

  Trajectory traj;
  traj.n_nodes = n;
  traj.n_steps = steps + 1;
  traj.dt = dt;
  traj.graph = graph;
  traj.states.resize(static_cast<std::size_t>(steps + 1) * n * 4);

  std::vector<double> cur = initial;
  std::copy(cur.begin(), cur.end(), traj.states.begin());

  long long* soft_counter = stats ? &stats->softening_events : nullptr;
  std::vector<double> force(static_cast<std::size_t>(n) * 2, 0.0);
  accumulate_forces(graph, cur, force, cfg.softening, soft_counter);

  const double h = dt / cfg.substeps;
  for (int step = 0; step < steps; ++step) {
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      // Kick-drift-kick; unit masses.
      for (int i = 0; i < n; ++i) {
        cur[static_cast<std::size_t>(i) * 4 + 2] += 0.5 * h * force[static_cast<std::size_t>(i) * 2];
        cur[static_cast<std::size_t>(i) * 4 + 3] += 0.5 * h * force[static_cast<std::size_t>(i) * 2 + 1];
        cur[static_cast<std::size_t>(i) * 4] += h * cur[static_cast<std::size_t>(i) * 4 + 2];
        cur[static_cast<std::size_t>(i) * 4 + 1] += h * cur[static_cast<std::size_t>(i) * 4 + 3];
      }
      accumulate_forces(graph, cur, force, cfg.softening, soft_counter);
      for (int i = 0; i < n; ++i) {
        cur[static_cast<std::size_t>(i) * 4 + 2] += 0.5 * h * force[static_cast<std::size_t>(i) * 2];
        cur[static_cast<std::size_t>(i) * 4 + 3] += 0.5 * h * force[static_cast<std::size_t>(i) * 2 + 1];
      }
    }
    for (double v : cur) {
      if (!std::isfinite(v) || std::abs(v) > cfg.diverge_bound) {
        throw DivergenceError("integrate: state left bounds at step " +
                              std::to_string(step + 1));
      }
    }
    std::copy(cur.begin(), cur.end(),
              traj.states.begin() + static_cast<std::size_t>(step + 1) * n * 4);
  }
  return traj;
}

namespace {

RelationGraph sample_graph(const std::vector<RelationType>& vocabulary,
                           const SimConfig& cfg, Rng& rng) {
  RelationGraph graph;
  graph.n_nodes = cfg.n_nodes;
  graph.relations.resize(static_cast<std::size_t>(cfg.n_nodes) *
                         (cfg.n_nodes - 1));
  for (int i = 0; i < cfg.n_nodes; ++i) {
    for (int j = i + 1; j < cfg.n_nodes; ++j) {
      const int label =
          static_cast<int>(rng.uniform_int(vocabulary.size()));
      const RelationType& type = vocabulary[static_cast<std::size_t>(label)];
      RelationSpec spec;
      spec.kind = type.kind;
      spec.coefficient = type.kind == RelationKind::None ? 0.0 : type.coefficient;
      spec.rest_length = type.rest_length;
      spec.label = label;
      graph.set_symmetric(i, j, spec);
    }
  }
  return graph;
}

std::vector<double> sample_initial(const SimConfig& cfg, Rng& rng) {
  std::vector<double> state(static_cast<std::size_t>(cfg.n_nodes) * 4);
  for (int i = 0; i < cfg.n_nodes; ++i) {
    state[static_cast<std::size_t>(i) * 4] = rng.uniform(-cfg.box_half, cfg.box_half);
    state[static_cast<std::size_t>(i) * 4 + 1] = rng.uniform(-cfg.box_half, cfg.box_half);
    state[static_cast<std::size_t>(i) * 4 + 2] = rng.normal() * cfg.vel_scale;
    state[static_cast<std::size_t>(i) * 4 + 3] = rng.normal() * cfg.vel_scale;
  }
  return state;
}

Trajectory generate_one(const std::vector<RelationType>& vocabulary,
                        const SimConfig& cfg, std::uint64_t seed,
                        std::uint64_t split_id, std::uint64_t index,
                        GenerationStats& stats) {
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0;; ++attempt) {
    Rng rng = Rng::derive(seed, split_id, index,
                          static_cast<std::uint64_t>(attempt));
    RelationGraph graph = sample_graph(vocabulary, cfg, rng);
    std::vector<double> initial = sample_initial(cfg, rng);
    try {
      return integrate(graph, initial, cfg.dt, cfg.steps - 1, cfg, &stats);
    } catch (const DivergenceError&) {
      ++stats.retries;
      if (attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

}  // namespace

RawDataset generate_dataset(char combo, int n_train, int n_valid, int n_test,
                            std::uint64_t seed, const SimConfig& cfg) {
  if (!combo_valid(combo)) {
    throw ConfigError(std::string("unknown relation combo '") + combo + "'");
  }
  if (n_train < 0 || n_valid < 0 || n_test < 0 || cfg.n_nodes < 2 ||
      cfg.steps < 2) {
    throw ConfigError("generate_dataset: invalid sizes");
  }
  RawDataset ds;
  ds.combo = combo;
  ds.seed = seed;
  ds.cfg = cfg;
  ds.vocabulary = combo_vocabulary(combo, cfg);

  const int sizes[3] = {n_train, n_valid, n_test};
  std::vector<Trajectory>* splits[3] = {&ds.train, &ds.valid, &ds.test};
  for (int s = 0; s < 3; ++s) {
    splits[s]->reserve(static_cast<std::size_t>(sizes[s]));
    for (int k = 0; k < sizes[s]; ++k) {
      splits[s]->push_back(generate_one(ds.vocabulary, cfg, seed,
                                        static_cast<std::uint64_t>(s),
                                        static_cast<std::uint64_t>(k),
                                        ds.stats));
    }
  }
  return ds;
}

}  // namespace relatent
