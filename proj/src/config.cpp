#include "relatent/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "relatent/binio.hpp"
#include "relatent/errors.hpp"

namespace relatent {

namespace {

using nlohmann::json;

template <typename T>
void pick(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig profile_config(const std::string& name) {
  RunConfig cfg;
  cfg.profile = name;
  if (name == "desk") {
    cfg.n_train = 500;
    cfg.n_valid = 50;
    cfg.n_test = 100;
    cfg.model.gru_hidden = 32;
    cfg.model.mlp_width = 48;
    cfg.model.relation_dim = 4;
    cfg.model.influence_dim = 24;
    cfg.training.m = 3;
    cfg.training.enc_window = 10;
    cfg.training.dec_window = 10;
    cfg.training.epochs = 150;
    cfg.training.batch_size = 32;
    cfg.training.lr_max = 3e-3;
    cfg.eval.enc_window = 10;
  } else if (name == "paper") {
    cfg.n_train = 5000;
    cfg.n_valid = 500;
    cfg.n_test = 500;
    cfg.model.gru_hidden = 128;
    cfg.model.mlp_width = 196;
    cfg.model.relation_dim = 10;
    cfg.model.influence_dim = 100;
    cfg.training.m = 5;
    cfg.training.enc_window = 49;
    cfg.training.dec_window = 10;
    cfg.training.epochs = 1000;
    cfg.training.batch_size = 64;
    cfg.training.lr_max = 1e-3;
    cfg.eval.enc_window = 49;
  } else {
    throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
  }
  cfg.eval.observe = 49;
  cfg.eval.horizon = 50;
  return cfg;
}

void merge_config_json(RunConfig& cfg, const std::string& json_text) {
  json j = json::parse(json_text);
  if (j.contains("profile")) {
    cfg = profile_config(j.at("profile").get<std::string>());
  }
  if (j.contains("combo")) {
    const auto s = j.at("combo").get<std::string>();
    if (s.size() != 1) throw ConfigError("combo must be a single letter a..h");
    cfg.combo = s[0];
  }
  pick(j, "n_train", cfg.n_train);
  pick(j, "n_valid", cfg.n_valid);
  pick(j, "n_test", cfg.n_test);
  pick(j, "seed", cfg.seed);
  pick(j, "dataset_dir", cfg.dataset_dir);
  pick(j, "out_dir", cfg.out_dir);
  pick(j, "k_range", cfg.k_range);
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    pick(s, "n_nodes", cfg.sim.n_nodes);
    pick(s, "steps", cfg.sim.steps);
    pick(s, "dt", cfg.sim.dt);
    pick(s, "substeps", cfg.sim.substeps);
    pick(s, "box_half", cfg.sim.box_half);
    pick(s, "vel_scale", cfg.sim.vel_scale);
    pick(s, "softening", cfg.sim.softening);
    pick(s, "diverge_bound", cfg.sim.diverge_bound);
    pick(s, "spring_k", cfg.sim.spring_k);
    pick(s, "gravity_k", cfg.sim.gravity_k);
    pick(s, "spring_rest", cfg.sim.spring_rest);
    pick(s, "grid_min", cfg.sim.grid_min);
    pick(s, "grid_max", cfg.sim.grid_max);
    pick(s, "grid_size", cfg.sim.grid_size);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    pick(m, "gru_hidden", cfg.model.gru_hidden);
    pick(m, "gru_layers", cfg.model.gru_layers);
    pick(m, "mlp_width", cfg.model.mlp_width);
    pick(m, "relation_dim", cfg.model.relation_dim);
    pick(m, "influence_dim", cfg.model.influence_dim);
    pick(m, "logstd_min", cfg.model.logstd_min);
    pick(m, "logstd_max", cfg.model.logstd_max);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    pick(t, "lambda_np", cfg.training.lambda_np);
    pick(t, "lambda_kl", cfg.training.lambda_kl);
    pick(t, "lambda_sd", cfg.training.lambda_sd);
    pick(t, "lambda_c", cfg.training.lambda_c);
    pick(t, "m", cfg.training.m);
    pick(t, "enc_window", cfg.training.enc_window);
    pick(t, "dec_window", cfg.training.dec_window);
    pick(t, "epochs", cfg.training.epochs);
    pick(t, "batch_size", cfg.training.batch_size);
    pick(t, "lr_max", cfg.training.lr_max);
    pick(t, "grad_clip", cfg.training.grad_clip);
    pick(t, "random_sampling", cfg.training.random_sampling);
    pick(t, "kl_printed_sign", cfg.training.kl_printed_sign);
    if (t.contains("sparsity_p") && !t.at("sparsity_p").is_null()) {
      cfg.training.sparsity_p = t.at("sparsity_p").get<double>();
    }
    if (t.contains("epsilon")) {
      const auto mode = t.at("epsilon").get<std::string>();
      if (mode == "off") {
        cfg.training.noise.mode = NoiseConfig::Mode::Off;
      } else if (mode == "gaussian") {
        cfg.training.noise.mode = NoiseConfig::Mode::Gaussian;
      } else {
        throw ConfigError("training.epsilon must be 'off' or 'gaussian'");
      }
    }
    pick(t, "epsilon_sigma", cfg.training.noise.sigma);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    pick(e, "observe", cfg.eval.observe);
    pick(e, "horizon", cfg.eval.horizon);
    pick(e, "enc_window", cfg.eval.enc_window);
    pick(e, "batch_size", cfg.eval.batch_size);
  }
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["profile"] = cfg.profile;
  j["combo"] = std::string(1, cfg.combo);
  j["n_train"] = cfg.n_train;
  j["n_valid"] = cfg.n_valid;
  j["n_test"] = cfg.n_test;
  j["seed"] = cfg.seed;
  j["dataset_dir"] = cfg.dataset_dir;
  j["out_dir"] = cfg.out_dir;
  j["k_range"] = cfg.k_range;
  j["sim"] = {{"n_nodes", cfg.sim.n_nodes},
              {"steps", cfg.sim.steps},
              {"dt", cfg.sim.dt},
              {"substeps", cfg.sim.substeps},
              {"box_half", cfg.sim.box_half},
              {"vel_scale", cfg.sim.vel_scale},
              {"softening", cfg.sim.softening},
              {"diverge_bound", cfg.sim.diverge_bound},
              {"spring_k", cfg.sim.spring_k},
              {"gravity_k", cfg.sim.gravity_k},
              {"spring_rest", cfg.sim.spring_rest},
              {"grid_min", cfg.sim.grid_min},
              {"grid_max", cfg.sim.grid_max},
              {"grid_size", cfg.sim.grid_size}};
  j["model"] = {{"gru_hidden", cfg.model.gru_hidden},
                {"gru_layers", cfg.model.gru_layers},
                {"mlp_width", cfg.model.mlp_width},
                {"relation_dim", cfg.model.relation_dim},
                {"influence_dim", cfg.model.influence_dim},
                {"logstd_min", cfg.model.logstd_min},
                {"logstd_max", cfg.model.logstd_max}};
  j["training"] = {
      {"lambda_np", cfg.training.lambda_np},
      {"lambda_kl", cfg.training.lambda_kl},
      {"lambda_sd", cfg.training.lambda_sd},
      {"lambda_c", cfg.training.lambda_c},
      {"m", cfg.training.m},
      {"enc_window", cfg.training.enc_window},
      {"dec_window", cfg.training.dec_window},
      {"epochs", cfg.training.epochs},
      {"batch_size", cfg.training.batch_size},
      {"lr_max", cfg.training.lr_max},
      {"grad_clip", cfg.training.grad_clip},
      {"random_sampling", cfg.training.random_sampling},
      {"kl_printed_sign", cfg.training.kl_printed_sign},
      {"epsilon", cfg.training.noise.mode == NoiseConfig::Mode::Gaussian
                      ? "gaussian"
                      : "off"},
      {"epsilon_sigma", cfg.training.noise.sigma}};
  if (cfg.training.sparsity_p.has_value()) {
    j["training"]["sparsity_p"] = *cfg.training.sparsity_p;
  } else {
    j["training"]["sparsity_p"] = nullptr;
  }
  j["eval"] = {{"observe", cfg.eval.observe},
               {"horizon", cfg.eval.horizon},
               {"enc_window", cfg.eval.enc_window},
               {"batch_size", cfg.eval.batch_size}};
  return j.dump(2);
}

RunConfig load_run_config(const std::string& profile,
                          const std::string& config_path) {
  RunConfig cfg = profile_config(profile);
  if (!config_path.empty()) {
    auto in = open_in(config_path, false);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    try {
      merge_config_json(cfg, text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("failed to parse " + config_path + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace relatent
