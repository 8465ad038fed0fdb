#include "relatent/data.hpp"

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "relatent/binio.hpp"
#include "relatent/errors.hpp"

namespace relatent {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kKindNames[] = {"none", "spring", "gravity"};

RelationKind kind_from_name(const std::string& name) {
  for (int k = 0; k < 3; ++k) {
    if (name == kKindNames[k]) return static_cast<RelationKind>(k);
  }
  throw IoError("dataset: unknown relation kind '" + name + "'");
}

void write_split(const std::vector<Trajectory>& split, const Normalization& norm,
                 const std::string& dir, const std::string& name) {
  std::vector<float> states;
  std::vector<float> labels;
  for (const Trajectory& traj : split) {
    for (int t = 0; t < traj.n_steps; ++t) {
      const double* row = traj.state(t);
      for (int i = 0; i < traj.n_nodes; ++i) {
        for (int d = 0; d < 4; ++d) {
          const double v = (row[i * 4 + d] - norm.mean[static_cast<std::size_t>(d)]) /
                           norm.std[static_cast<std::size_t>(d)];
          states.push_back(static_cast<float>(v));
        }
      }
    }
    for (const RelationSpec& spec : traj.graph.relations) {
      labels.push_back(static_cast<float>(spec.label));
    }
  }
  auto sf = open_out(dir + "/" + name + "_states.bin");
  write_f32_le(sf, states.data(), states.size());
  auto lf = open_out(dir + "/" + name + "_labels.bin");
  write_f32_le(lf, labels.data(), labels.size());
}

LoadedSplit read_split(const std::string& dir, const std::string& name,
                       int n_traj, int steps, int n_nodes) {
  LoadedSplit split;
  split.n_traj = n_traj;
  split.states.resize(static_cast<std::size_t>(n_traj) * steps * n_nodes * 4);
  split.labels.resize(static_cast<std::size_t>(n_traj) * n_nodes * (n_nodes - 1));
  if (n_traj == 0) return split;
  auto sf = open_in(dir + "/" + name + "_states.bin");
  read_f32_le(sf, split.states.data(), split.states.size());
  auto lf = open_in(dir + "/" + name + "_labels.bin");
  read_f32_le(lf, split.labels.data(), split.labels.size());
  return split;
}

}  // namespace

Normalization fit_normalization(const std::vector<Trajectory>& train) {
  Normalization norm;
  std::array<double, 4> sum{0, 0, 0, 0};
  std::array<double, 4> sum_sq{0, 0, 0, 0};
  long long count = 0;
  for (const Trajectory& traj : train) {
    for (int t = 0; t < traj.n_steps; ++t) {
      const double* row = traj.state(t);
      for (int i = 0; i < traj.n_nodes; ++i) {
        for (std::size_t d = 0; d < 4; ++d) {
          sum[d] += row[i * 4 + d];
          sum_sq[d] += row[i * 4 + d] * row[i * 4 + d];
        }
      }
      count += traj.n_nodes;
    }
  }
  if (count == 0) return norm;
  for (std::size_t d = 0; d < 4; ++d) {
    norm.mean[d] = sum[d] / static_cast<double>(count);
    const double var = sum_sq[d] / static_cast<double>(count) -
                       norm.mean[d] * norm.mean[d];
    norm.std[d] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return norm;
}

void write_dataset(const RawDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  const Normalization norm = fit_normalization(ds.train);

  json vocab = json::array();
  for (const RelationType& type : ds.vocabulary) {
    vocab.push_back({{"name", type.name},
                     {"kind", relation_kind_name(type.kind)},
                     {"coefficient", type.coefficient},
                     {"rest_length", type.rest_length}});
  }
  json manifest;
  manifest["format"] = "relatent-dataset";
  manifest["version"] = 1;
  manifest["combo"] = std::string(1, ds.combo);
  manifest["seed"] = ds.seed;
  manifest["n_nodes"] = ds.cfg.n_nodes;
  manifest["steps"] = ds.cfg.steps;
  manifest["node_dim"] = 4;
  manifest["dt"] = ds.cfg.dt;
  manifest["sizes"] = {{"train", ds.train.size()},
                       {"valid", ds.valid.size()},
                       {"test", ds.test.size()}};
  manifest["normalization"] = {{"mean", norm.mean}, {"std", norm.std}};
  manifest["vocabulary"] = vocab;
  manifest["stats"] = {{"retries", ds.stats.retries},
                       {"softening_events", ds.stats.softening_events}};
  manifest["sim"] = {{"substeps", ds.cfg.substeps},
                     {"box_half", ds.cfg.box_half},
                     {"vel_scale", ds.cfg.vel_scale},
                     {"softening", ds.cfg.softening},
                     {"diverge_bound", ds.cfg.diverge_bound},
                     {"spring_k", ds.cfg.spring_k},
                     {"gravity_k", ds.cfg.gravity_k},
                     {"spring_rest", ds.cfg.spring_rest},
                     {"grid_min", ds.cfg.grid_min},
                     {"grid_max", ds.cfg.grid_max},
                     {"grid_size", ds.cfg.grid_size}};
  {
    auto out = open_out(dir + "/manifest.json", false);
    out << manifest.dump(2) << "\n";
  }
  write_split(ds.train, norm, dir, "train");
  write_split(ds.valid, norm, dir, "valid");
  write_split(ds.test, norm, dir, "test");
}

LoadedDataset load_dataset(const std::string& dir) {
  json manifest;
  {
    auto in = open_in(dir + "/manifest.json", false);
    in >> manifest;
  }
  if (manifest.value("format", "") != "relatent-dataset") {
    throw IoError("load_dataset: " + dir + "/manifest.json is not a dataset manifest");
  }
  LoadedDataset ds;
  ds.combo = manifest.at("combo").get<std::string>().at(0);
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.n_nodes = manifest.at("n_nodes").get<int>();
  ds.steps = manifest.at("steps").get<int>();
  ds.node_dim = manifest.at("node_dim").get<int>();
  ds.dt = manifest.at("dt").get<double>();
  ds.norm.mean = manifest.at("normalization").at("mean").get<std::array<double, 4>>();
  ds.norm.std = manifest.at("normalization").at("std").get<std::array<double, 4>>();
  for (const auto& entry : manifest.at("vocabulary")) {
    RelationType type;
    type.name = entry.at("name").get<std::string>();
    type.kind = kind_from_name(entry.at("kind").get<std::string>());
    type.coefficient = entry.at("coefficient").get<double>();
    type.rest_length = entry.at("rest_length").get<double>();
    ds.vocabulary.push_back(type);
  }
  const int n_train = manifest.at("sizes").at("train").get<int>();
  const int n_valid = manifest.at("sizes").at("valid").get<int>();
  const int n_test = manifest.at("sizes").at("test").get<int>();
  ds.train = read_split(dir, "train", n_train, ds.steps, ds.n_nodes);
  ds.valid = read_split(dir, "valid", n_valid, ds.steps, ds.n_nodes);
  ds.test = read_split(dir, "test", n_test, ds.steps, ds.n_nodes);
  return ds;
}

}  // namespace relatent
