// Command-line pipeline: dataset generation, training, evaluation and
// relation analysis. Every command is deterministic given its config and
// seed, and echoes the fully resolved config into its output directory.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "relatent/analysis.hpp"
#include "relatent/binio.hpp"
#include "relatent/checkpoint.hpp"
#include "relatent/config.hpp"
#include "relatent/data.hpp"
#include "relatent/errors.hpp"
#include "relatent/model.hpp"
#include "relatent/sim.hpp"
#include "relatent/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relatent;

namespace {

struct CommonArgs {
  std::string profile = "desk";
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args.profile, args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  auto out = open_out(dir + "/run_config.json", false);
  out << run_config_to_json(cfg) << "\n";
}

Model model_for_dataset(const RunConfig& cfg, const LoadedDataset& data) {
  ModelConfig mc = cfg.model;
  mc.n_nodes = data.n_nodes;
  mc.node_dim = data.node_dim;
  return build_model(mc, cfg.seed);
}

RunConfig config_from_run_dir(const std::string& run_dir) {
  auto in = open_in(run_dir + "/run_config.json", false);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  RunConfig cfg = profile_config("desk");
  merge_config_json(cfg, text);
  return cfg;
}

int cmd_generate(const CommonArgs& common, const std::string& combo_str) {
  RunConfig cfg = resolve_config(common);
  if (!combo_str.empty()) {
    if (combo_str.size() != 1) {
      throw ConfigError("--combo expects a single letter a..h");
    }
    cfg.combo = combo_str[0];
  }
  if (!combo_valid(cfg.combo)) {
    throw ConfigError(std::string("unknown relation combo '") + cfg.combo + "'");
  }
  if (cfg.out_dir.empty()) {
    throw ConfigError("generate: --out directory is required");
  }
  RawDataset ds = generate_dataset(cfg.combo, cfg.n_train, cfg.n_valid,
                                   cfg.n_test, cfg.seed, cfg.sim);
  write_dataset(ds, cfg.out_dir);
  write_manifest(cfg, cfg.out_dir);
  std::cout << "dataset " << cfg.combo << ": " << ds.train.size() << "/"
            << ds.valid.size() << "/" << ds.test.size() << " trajectories -> "
            << cfg.out_dir << " (retries " << ds.stats.retries << ")\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& dataset_dir,
              const std::vector<std::string>& ablations,
              const std::string& epsilon, double sparsity, bool resume) {
  RunConfig cfg = resolve_config(common);
  if (!dataset_dir.empty()) cfg.dataset_dir = dataset_dir;
  if (cfg.dataset_dir.empty()) throw ConfigError("train: --dataset is required");
  if (cfg.out_dir.empty()) throw ConfigError("train: --out directory is required");
  if (!fs::exists(cfg.dataset_dir + "/manifest.json")) {
    throw IoError("train: no dataset at " + cfg.dataset_dir);
  }
  for (const std::string& a : ablations) {
    if (a == "rst") {
      cfg.training.random_sampling = false;
    } else if (a == "rsdl") {
      cfg.training.lambda_sd = 0.0;
    } else {
      throw ConfigError("train: unknown ablation '" + a + "' (rst or rsdl)");
    }
  }
  if (!epsilon.empty()) {
    if (epsilon == "gaussian") {
      cfg.training.noise.mode = NoiseConfig::Mode::Gaussian;
    } else if (epsilon == "off") {
      cfg.training.noise.mode = NoiseConfig::Mode::Off;
    } else {
      throw ConfigError("train: --epsilon must be off or gaussian");
    }
  }
  if (sparsity >= 0.0) cfg.training.sparsity_p = sparsity;
  cfg.training.seed = cfg.seed;

  LoadedDataset data = load_dataset(cfg.dataset_dir);
  cfg.model.n_nodes = data.n_nodes;
  Model model = model_for_dataset(cfg, data);
  write_manifest(cfg, cfg.out_dir);

  TrainResult result =
      train_model(model, data, cfg.training, cfg.eval, cfg.out_dir, resume);
  std::cout << "trained " << cfg.training.epochs << " epochs; best val mse "
            << result.best_val << " at epoch " << result.best_epoch << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& dataset_dir,
             const std::string& run_dir, const std::string& which) {
  RunConfig cfg = config_from_run_dir(run_dir);
  if (common.seed_set) cfg.seed = common.seed;
  if (!dataset_dir.empty()) cfg.dataset_dir = dataset_dir;
  const std::string out_path =
      common.out_dir.empty() ? run_dir + "/eval_report.json" : common.out_dir;

  LoadedDataset data = load_dataset(cfg.dataset_dir);
  Model model = model_for_dataset(cfg, data);
  const std::string prefix = run_dir + "/ckpt_" + which;
  load_params(model.params, prefix);

  EvalResult test_result = evaluate_split(model, data.test, data.steps, cfg.eval);

  json report;
  report["format"] = "relatent-eval-report";
  report["version"] = 1;
  report["combo"] = std::string(1, data.combo);
  report["checkpoint"] = which;
  report["n_trajectories"] = data.test.n_traj;
  report["observe"] = cfg.eval.observe;
  report["horizon"] = cfg.eval.horizon;
  report["enc_window"] = cfg.eval.enc_window;
  report["mse"] = test_result.mse;
  report["mse_per_step"] = test_result.mse_per_step;
  {
    auto out = open_out(out_path, false);
    out << report.dump(2) << "\n";
  }
  std::cout << "test mse " << test_result.mse << " over " << cfg.eval.horizon
            << " steps -> " << out_path << "\n";
  return 0;
}

int cmd_analyze(const CommonArgs& common, const std::string& dataset_dir,
                const std::string& run_dir, const std::string& which) {
  RunConfig cfg = config_from_run_dir(run_dir);
  if (common.seed_set) cfg.seed = common.seed;
  if (!dataset_dir.empty()) cfg.dataset_dir = dataset_dir;
  const std::string out_dir =
      common.out_dir.empty() ? run_dir + "/analysis" : common.out_dir;
  fs::create_directories(out_dir);

  LoadedDataset data = load_dataset(cfg.dataset_dir);
  Model model = model_for_dataset(cfg, data);
  load_params(model.params, run_dir + "/ckpt_" + which);

  RelationReadout train_rel =
      read_relations(model, data.train, data.steps, cfg.eval);
  RelationReadout test_rel =
      read_relations(model, data.test, data.steps, cfg.eval);

  PointSet train_points{train_rel.n_edges, train_rel.relation_dim,
                        train_rel.mean};
  PointSet test_points{test_rel.n_edges, test_rel.relation_dim, test_rel.mean};

  // Clustering is fitted on training latents, applied to the test split.
  const int k_true = static_cast<int>(data.vocabulary.size());
  KMeansResult fit = kmeans(train_points, k_true, cfg.seed);
  std::vector<int> test_assign = kmeans_assign(fit, test_points);
  const double accuracy = cluster_accuracy(test_assign, test_rel.labels);

  ChooseKResult kchoice = choose_k(train_points, cfg.k_range, cfg.seed);

  json report;
  report["format"] = "relatent-analysis";
  report["version"] = 1;
  report["combo"] = std::string(1, data.combo);
  report["k_true"] = k_true;
  report["accuracy"] = accuracy;
  report["k_star"] = kchoice.best_k;
  json scores = json::object();
  for (std::size_t i = 0; i < kchoice.ks.size(); ++i) {
    scores[std::to_string(kchoice.ks[i])] = kchoice.scores[i];
  }
  report["silhouette"] = scores;
  report["n_edges_train"] = train_rel.n_edges;
  report["n_edges_test"] = test_rel.n_edges;
  report["seed"] = cfg.seed;
  {
    auto out = open_out(out_dir + "/accuracy.json", false);
    out << report.dump(2) << "\n";
  }
  {
    auto out = open_out(out_dir + "/silhouette.csv", false);
    out << "k,score\n";
    for (std::size_t i = 0; i < kchoice.ks.size(); ++i) {
      out << kchoice.ks[i] << "," << kchoice.scores[i] << "\n";
    }
  }
  {
    PointSet projected = pca_project(test_points, 2);
    auto out = open_out(out_dir + "/scatter.csv", false);
    out << "pc1,pc2,label,centrality\n";
    for (int i = 0; i < projected.n; ++i) {
      out << projected.row(i)[0] << "," << projected.row(i)[1] << ","
          << test_rel.labels[static_cast<std::size_t>(i)] << ","
          << test_rel.centrality[static_cast<std::size_t>(i)] << "\n";
    }
  }
  {
    // Mean centrality per ground-truth relation type.
    const std::size_t k = data.vocabulary.size();
    std::vector<double> sum(k, 0.0), sum_sq(k, 0.0);
    std::vector<long long> count(k, 0);
    for (std::size_t i = 0; i < test_rel.centrality.size(); ++i) {
      const auto label = static_cast<std::size_t>(test_rel.labels[i]);
      sum[label] += test_rel.centrality[i];
      sum_sq[label] += test_rel.centrality[i] * test_rel.centrality[i];
      ++count[label];
    }
    auto out = open_out(out_dir + "/centrality_by_type.csv", false);
    out << "label,name,mean_centrality,std_centrality,count\n";
    for (std::size_t label = 0; label < k; ++label) {
      const double n = count[label] > 0 ? static_cast<double>(count[label]) : 1.0;
      const double mean = sum[label] / n;
      const double var = std::max(0.0, sum_sq[label] / n - mean * mean);
      out << label << "," << data.vocabulary[label].name << "," << mean << ","
          << std::sqrt(var) << "," << count[label] << "\n";
    }
  }
  std::cout << "accuracy " << accuracy << ", k* " << kchoice.best_k << " -> "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent relation discovery for interacting systems"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string combo_str;
  std::string dataset_dir;
  std::string run_dir;
  std::string checkpoint = "best";
  std::string epsilon;
  std::vector<std::string> ablations;
  double sparsity = -1.0;
  bool resume = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--profile", common.profile, "desk or paper");
    cmd->add_option("--config", common.config_path, "JSON config file");
    cmd->add_option("--out", common.out_dir, "output directory / file");
    cmd->add_option("--seed", common.seed, "run seed")
        ->each([&](const std::string&) { common.seed_set = true; });
  };

  CLI::App* generate = app.add_subcommand("generate", "simulate a dataset");
  add_common(generate);
  generate->add_option("--combo", combo_str, "relation combination a..h");

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train);
  train->add_option("--dataset", dataset_dir, "dataset directory");
  train->add_option("--ablate", ablations, "disable a mechanism: rst, rsdl");
  train->add_option("--epsilon", epsilon, "influence gate noise: off, gaussian");
  train->add_option("--sparsity", sparsity, "sparsity prior in [0,1]");
  train->add_flag("--resume", resume, "continue from the last checkpoint");

  CLI::App* eval_cmd = app.add_subcommand("eval", "trajectory prediction report");
  add_common(eval_cmd);
  eval_cmd->add_option("--dataset", dataset_dir, "dataset directory");
  eval_cmd->add_option("--run", run_dir, "training run directory")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "best or last");

  CLI::App* analyze = app.add_subcommand("analyze", "relation recovery report");
  add_common(analyze);
  analyze->add_option("--dataset", dataset_dir, "dataset directory");
  analyze->add_option("--run", run_dir, "training run directory")->required();
  analyze->add_option("--checkpoint", checkpoint, "best or last");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(common, combo_str);
    if (train->parsed()) {
      return cmd_train(common, dataset_dir, ablations, epsilon, sparsity, resume);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(common, dataset_dir, run_dir, checkpoint);
    }
    if (analyze->parsed()) {
      return cmd_analyze(common, dataset_dir, run_dir, checkpoint);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
