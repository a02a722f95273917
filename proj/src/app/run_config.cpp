#include "pairpred/app/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pairpred/errors.hpp"

namespace pairpred::app {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("training.lr must be > 0");
  if (epochs < 1) throw ValidationError("training.epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("training.batch_size must be >= 1");
  if (!(mode_ce_weight >= 0.0)) throw ValidationError("training.mode_ce_weight must be >= 0");
}

std::size_t horizon_steps(int horizon_s) {
  if (horizon_s != 3 && horizon_s != 5) throw ValidationError("horizon must be 3 or 5 seconds");
  return static_cast<std::size_t>(horizon_s * static_cast<int>(scenedata::kFrameRateHz));
}

void RunConfig::validate() const {
  synth.validate();
  model.validate();
  training.validate();
  if (data.stride < 1) throw ValidationError("data.stride must be >= 1");
  if (!(data.map_spacing > 0.0)) throw ValidationError("data.map_spacing must be > 0");
  if (model.t_f != 15 && model.t_f != 25) throw ValidationError("model.t_f must be 15 or 25");
  if (horizons.empty()) throw ValidationError("horizons must not be empty");
  for (int h : horizons) {
    if (horizon_steps(h) > model.t_f) {
      throw ValidationError("horizon " + std::to_string(h) + " s exceeds model.t_f");
    }
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    const json root = json::parse(text);
    reject_unknown(root, "", {"data", "synth", "model", "training", "horizons"});
    if (root.contains("data")) {
      const auto& d = root["data"];
      reject_unknown(d, "data", {"dir", "stride", "map_spacing", "max_scenes"});
      read(d, "dir", cfg.data.dir);
      read(d, "stride", cfg.data.stride);
      read(d, "map_spacing", cfg.data.map_spacing);
      read(d, "max_scenes", cfg.data.max_scenes);
      if (!cfg.data.dir.empty() && std::filesystem::path(cfg.data.dir).is_relative() && !base_dir.empty()) {
        cfg.data.dir = (base_dir / cfg.data.dir).lexically_normal().string();
      }
    }
    if (root.contains("synth")) {
      const auto& s = root["synth"];
      reject_unknown(s, "synth", {"n_agents", "ring_radius", "entry_arms", "gap_accept_s", "noise_std", "seed"});
      read(s, "n_agents", cfg.synth.n_agents);
      read(s, "ring_radius", cfg.synth.ring_radius);
      read(s, "entry_arms", cfg.synth.entry_arms);
      read(s, "gap_accept_s", cfg.synth.gap_accept_s);
      read(s, "noise_std", cfg.synth.noise_std);
      read(s, "seed", cfg.synth.seed);
    }
    if (root.contains("model")) {
      const auto& m = root["model"];
      reject_unknown(m, "model",
                     {"d_model", "n_heads", "n_dec", "n_gnn", "n_enc", "n_modes", "saienc", "t_f", "sigma_bias",
                      "init_seed"});
      read(m, "d_model", cfg.model.d_model);
      read(m, "n_heads", cfg.model.n_heads);
      read(m, "n_dec", cfg.model.n_dec);
      read(m, "n_gnn", cfg.model.n_gnn);
      read(m, "n_enc", cfg.model.n_enc);
      read(m, "n_modes", cfg.model.n_modes);
      if (m.contains("saienc")) cfg.model.saienc = mapformer::sai_encoder_from_string(m["saienc"].get<std::string>());
      read(m, "t_f", cfg.model.t_f);
      read(m, "sigma_bias", cfg.model.sigma_bias);
      read(m, "init_seed", cfg.model.init_seed);
    }
    if (root.contains("training")) {
      const auto& t = root["training"];
      reject_unknown(t, "training", {"lr", "batch_size", "epochs", "seed", "wta", "mode_ce_weight"});
      read(t, "lr", cfg.training.lr);
      read(t, "batch_size", cfg.training.batch_size);
      read(t, "epochs", cfg.training.epochs);
      read(t, "seed", cfg.training.seed);
      read(t, "wta", cfg.training.wta);
      read(t, "mode_ce_weight", cfg.training.mode_ce_weight);
    }
    read(root, "horizons", cfg.horizons);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["data"] = {{"dir", cfg.data.dir},
               {"stride", cfg.data.stride},
               {"map_spacing", cfg.data.map_spacing},
               {"max_scenes", cfg.data.max_scenes}};
  j["synth"] = {{"n_agents", cfg.synth.n_agents},         {"ring_radius", cfg.synth.ring_radius},
                {"entry_arms", cfg.synth.entry_arms},     {"gap_accept_s", cfg.synth.gap_accept_s},
                {"noise_std", cfg.synth.noise_std},       {"seed", cfg.synth.seed}};
  j["model"] = nlohmann::ordered_json::parse(cfg.model.to_json());
  j["training"] = {{"lr", cfg.training.lr},         {"batch_size", cfg.training.batch_size},
                   {"epochs", cfg.training.epochs}, {"seed", cfg.training.seed},
                   {"wta", cfg.training.wta},       {"mode_ce_weight", cfg.training.mode_ce_weight}};
  j["horizons"] = cfg.horizons;
  return j.dump(2);
}

}  // namespace pairpred::app
