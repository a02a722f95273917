#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "pairpred/app/run_config.hpp"
#include "pairpred/mapformer/model.hpp"
#include "pairpred/scenedata.hpp"
#include "pairpred/scenegraph.hpp"

namespace pairpred::app {

/// Windowed scenes with their road-agent graphs.
struct SceneSet {
  std::shared_ptr<const scenegraph::RoadGraph> road;
  std::vector<scenedata::SceneSample> samples;
  std::vector<scenegraph::SceneGraph> graphs;
  std::vector<scenedata::InteractionLabel> labels;

  std::size_t size() const { return samples.size(); }
};

// Dataset directory layout.
inline constexpr const char* kTracksFile = "tracks.csv";
inline constexpr const char* kLabelsFile = "labels.csv";
inline constexpr const char* kMapFile = "map.csv";

/// Writes tracks, labels and the matching road map of a synthetic run.
void write_dataset(const std::filesystem::path& dir, const scenedata::SynthResult& data,
                   const scenegraph::MapDescription& map);
void generate_dataset(const std::filesystem::path& dir, const scenedata::SynthConfig& synth, double map_spacing);

/// max_scenes = 0 keeps every window.
SceneSet build_scene_set(const std::vector<scenedata::Track>& tracks, std::vector<scenedata::InteractionLabel> labels,
                         std::shared_ptr<const scenegraph::RoadGraph> road, std::size_t t_f, std::size_t stride,
                         std::size_t max_scenes = 0);
SceneSet load_scene_set(const std::filesystem::path& dir, std::size_t t_f, std::size_t stride,
                        std::size_t max_scenes = 0);
SceneSet synth_scene_set(const scenedata::SynthConfig& synth, double map_spacing, std::size_t t_f,
                         std::size_t stride, std::size_t max_scenes = 0);
/// Scene set described by the run config's data section.
SceneSet scene_set_for(const RunConfig& cfg);

struct TrainResult {
  mapformer::MapFormer model;
  std::vector<double> epoch_mgnll;  // mean per-term MGNLL of the winning mode
  std::vector<double> epoch_loss;   // mean total loss per scene
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::size_t stride = 5;         // recorded in checkpoint metadata
  std::function<void(std::size_t epoch, double mgnll)> on_epoch;
};

inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kTrainLogFile = "train_log.csv";

/// Adam over per-scene forward passes with gradients accumulated across a
/// batch. Writes the training log and a checkpoint after every epoch. A
/// non-finite loss or gradient throws NumericError and leaves the last
/// good checkpoint in place.
TrainResult train_model(const mapformer::ModelConfig& model_cfg, const TrainingConfig& cfg, const SceneSet& train,
                        const TrainOptions& opts = {});

/// Mean over scenes of the winning mode's per-term MGNLL.
double mean_mgnll(const mapformer::MapFormer& model, const SceneSet& scenes, const mapformer::LossOptions& opts = {});

const scenegraph::SceneGraph* graph_for(const mapformer::MapFormer& model, const SceneSet& set, std::size_t i);

struct LoadedModel {
  mapformer::MapFormer model;
  std::size_t stride = 5;
};

std::string checkpoint_metadata(const mapformer::ModelConfig& cfg, std::size_t stride, std::size_t epoch);
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace pairpred::app
