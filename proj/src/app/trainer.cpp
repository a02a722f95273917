#include "pairpred/app/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "pairpred/diffcore/checkpoint.hpp"
#include "pairpred/errors.hpp"

namespace pairpred::app {

void write_dataset(const std::filesystem::path& dir, const scenedata::SynthResult& data,
                   const scenegraph::MapDescription& map) {
  std::filesystem::create_directories(dir);
  scenedata::write_tracks(dir / kTracksFile, data.tracks);
  scenedata::write_labels(dir / kLabelsFile, data.labels);
  scenegraph::write_map(dir / kMapFile, map);
}

void generate_dataset(const std::filesystem::path& dir, const scenedata::SynthConfig& synth, double map_spacing) {
  const auto data = scenedata::synth_roundabout(synth);
  write_dataset(dir, data, scenegraph::roundabout_map(scenedata::geometry_for(synth), map_spacing));
}

SceneSet build_scene_set(const std::vector<scenedata::Track>& tracks, std::vector<scenedata::InteractionLabel> labels,
                         std::shared_ptr<const scenegraph::RoadGraph> road, std::size_t t_f, std::size_t stride,
                         std::size_t max_scenes) {
  SceneSet set;
  set.road = std::move(road);
  set.labels = std::move(labels);
  set.samples = scenedata::window_scenes(tracks, scenedata::kHistorySteps, t_f, stride);
  if (max_scenes && set.samples.size() > max_scenes) set.samples.resize(max_scenes);
  for (const auto& s : set.samples) set.graphs.push_back(scenegraph::attach_agents(set.road, s));
  return set;
}

SceneSet load_scene_set(const std::filesystem::path& dir, std::size_t t_f, std::size_t stride,
                        std::size_t max_scenes) {
  const auto tracks = scenedata::load_tracks(dir / kTracksFile);
  std::vector<scenedata::InteractionLabel> labels;
  if (std::filesystem::exists(dir / kLabelsFile)) labels = scenedata::load_labels(dir / kLabelsFile);
  auto road = std::make_shared<const scenegraph::RoadGraph>(scenegraph::build_road_graph(dir / kMapFile));
  return build_scene_set(tracks, std::move(labels), std::move(road), t_f, stride, max_scenes);
}

SceneSet synth_scene_set(const scenedata::SynthConfig& synth, double map_spacing, std::size_t t_f,
                         std::size_t stride, std::size_t max_scenes) {
  auto data = scenedata::synth_roundabout(synth);
  auto road = std::make_shared<const scenegraph::RoadGraph>(
      scenegraph::build_road_graph(scenegraph::roundabout_map(scenedata::geometry_for(synth), map_spacing)));
  return build_scene_set(data.tracks, std::move(data.labels), std::move(road), t_f, stride, max_scenes);
}

SceneSet scene_set_for(const RunConfig& cfg) {
  if (!cfg.data.dir.empty()) return load_scene_set(cfg.data.dir, cfg.model.t_f, cfg.data.stride, cfg.data.max_scenes);
  return synth_scene_set(cfg.synth, cfg.data.map_spacing, cfg.model.t_f, cfg.data.stride, cfg.data.max_scenes);
}

const scenegraph::SceneGraph* graph_for(const mapformer::MapFormer& model, const SceneSet& set, std::size_t i) {
  return model.config().saienc == mapformer::SaiEncoder::none ? nullptr : &set.graphs[i];
}

std::string checkpoint_metadata(const mapformer::ModelConfig& cfg, std::size_t stride, std::size_t epoch) {
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(cfg.to_json());
  j["stride"] = stride;
  j["epoch"] = epoch;
  return j.dump();
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  const auto data = diff::load_checkpoint(checkpoint);
  mapformer::ModelConfig cfg;
  std::size_t stride = 5;
  try {
    const auto j = nlohmann::json::parse(data.metadata);
    cfg = mapformer::ModelConfig::from_json(j.at("model").dump());
    stride = j.at("stride").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint metadata is not a model description: ") + e.what());
  }
  LoadedModel out{mapformer::MapFormer(cfg), stride};
  diff::restore_parameters(out.model.parameters(), data);
  return out;
}

namespace {

void write_log(const std::filesystem::path& path, const std::vector<double>& mgnll, const std::vector<double>& loss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,mean_mgnll,mean_loss\n";
  char buf[96];
  for (std::size_t e = 0; e < mgnll.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1, mgnll[e], loss[e]);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

TrainResult train_model(const mapformer::ModelConfig& model_cfg, const TrainingConfig& cfg, const SceneSet& train,
                        const TrainOptions& opts) {
  cfg.validate();
  if (train.size() == 0) throw ValidationError("training set has no scenes");
  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);
  TrainResult result{mapformer::MapFormer(model_cfg), {}, {}};
  auto& model = result.model;
  std::vector<diff::Tensor> params = model.parameters().tensors();
  diff::AdamState adam;
  const diff::AdamConfig adam_cfg{cfg.lr};
  const mapformer::LossOptions loss_opts{cfg.wta, cfg.mode_ce_weight};
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double mgnll_sum = 0.0, loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        model.parameters().zero_grad();
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[k];
          const auto fr = model.forward(train.samples[i], graph_for(model, train, i));
          const auto loss = mapformer::scene_loss(fr, train.samples[i], loss_opts);
          const double value = loss.total.item();
          if (!std::isfinite(value)) throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1));
          mgnll_sum += loss.winner_mean_nll();
          loss_sum += value;
          diff::scale(loss.total, 1.0 / static_cast<double>(end - start)).backward();
        }
        const auto grads = model.parameters().gradients();
        diff::adam_step(params, grads, adam, adam_cfg);
      }
    } catch (const NumericError& e) {
      if (!opts.out_dir.empty()) write_log(opts.out_dir / kTrainLogFile, result.epoch_mgnll, result.epoch_loss);
      throw NumericError(std::string(e.what()) + "; training aborted, last good checkpoint kept");
    }
    const double n = static_cast<double>(train.size());
    result.epoch_mgnll.push_back(mgnll_sum / n);
    result.epoch_loss.push_back(loss_sum / n);
    if (!opts.out_dir.empty()) {
      write_log(opts.out_dir / kTrainLogFile, result.epoch_mgnll, result.epoch_loss);
      diff::save_checkpoint(opts.out_dir / kCheckpointFile, checkpoint_metadata(model_cfg, opts.stride, epoch + 1),
                            model.parameters());
    }
    if (opts.on_epoch) opts.on_epoch(epoch + 1, result.epoch_mgnll.back());
  }
  return result;
}

double mean_mgnll(const mapformer::MapFormer& model, const SceneSet& scenes, const mapformer::LossOptions& opts) {
  if (scenes.size() == 0) throw ValidationError("no scenes to score");
  diff::NoGradGuard no_grad;
  double sum = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto fr = model.forward(scenes.samples[i], graph_for(model, scenes, i));
    sum += mapformer::scene_loss(fr, scenes.samples[i], opts).winner_mean_nll();
  }
  return sum / static_cast<double>(scenes.size());
}

}  // namespace pairpred::app
