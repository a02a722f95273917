#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairpred/mapformer/layers.hpp"
#include "pairpred/scenedata.hpp"
#include "pairpred/scenegraph.hpp"

namespace pairpred::mapformer {

enum class SaiEncoder { none, gnn, attention };

std::string to_string(SaiEncoder e);
SaiEncoder sai_encoder_from_string(const std::string& s);

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_dec = 2;   // decoder repetitions
  std::size_t n_gnn = 3;   // spatial encoder depth (GNN hops or attention layers)
  std::size_t n_enc = 1;   // temporal encoder layers
  std::size_t n_modes = 6;
  SaiEncoder saienc = SaiEncoder::attention;
  std::size_t t_f = 15;
  double sigma_bias = 0.05;  // m
  std::uint64_t init_seed = 1;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Positions, speeds and edge offsets are divided by this before entering
/// the network; trajectory head outputs are multiplied by it.
inline constexpr double kPositionScale = 10.0;

/// Differentiable outputs of one forward pass.
struct ForwardResult {
  std::vector<Tensor> traj;  // per mode [A, T_f, 2], meters, scene frame
  std::vector<Tensor> cov;   // per mode [A-1, T_f, 10], scales already constrained
  Tensor mode_logits;        // [n_modes]
  std::vector<std::size_t> others;  // agent index behind each pair row
};

/// Plain-array prediction for downstream use.
struct PredictionOutput {
  std::size_t n_modes = 0;
  std::size_t n_agents = 0;
  std::size_t t_f = 0;
  std::size_t ego_index = 0;
  std::vector<std::size_t> others;
  std::vector<double> traj;        // [n_modes, A, T_f, 2]
  std::vector<double> cov_params;  // [n_modes, A-1, T_f, 10]
  std::vector<double> mode_logits; // [n_modes]

  double traj_at(std::size_t m, std::size_t a, std::size_t t, std::size_t k) const {
    return traj[((m * n_agents + a) * t_f + t) * 2 + k];
  }
  const double* cov_at(std::size_t m, std::size_t pair, std::size_t t) const {
    return &cov_params[((m * (n_agents - 1) + pair) * t_f + t) * 10];
  }
  std::vector<double> mode_probabilities() const;
};

PredictionOutput to_prediction(const ForwardResult& fr, std::size_t ego_index);

/// Temporal encoder, switchable spatial-and-interaction encoder,
/// factorized decoder and the multi-mode trajectory/pair-covariance heads.
class MapFormer {
 public:
  explicit MapFormer(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterStore& parameters() noexcept { return store_; }
  const ParameterStore& parameters() const noexcept { return store_; }

  /// `graph` may be null when saienc is none.
  ForwardResult forward(const scenedata::SceneSample& sample, const scenegraph::SceneGraph* graph) const;
  PredictionOutput predict(const scenedata::SceneSample& sample, const scenegraph::SceneGraph* graph) const;

  /// [A, T_h, d]; attention stays within each agent's own history.
  Tensor temporal_encode(const scenedata::SceneSample& sample) const;
  /// [A, d]
  Tensor spatial_encode_gnn(const scenegraph::SceneGraph& graph) const;
  Tensor spatial_encode_attn(const scenegraph::SceneGraph& graph) const;
  /// temporal [A, T_h, d], spatial [A, d] or undefined -> [A, T_f, d].
  Tensor decode(const Tensor& temporal, const Tensor& spatial, const Tensor* temporal_mask) const;
  /// `anchor` [A, T_f, 2] is added to the scaled trajectory head output.
  ForwardResult predict_heads(const Tensor& decoded, std::size_t ego_index, const Tensor& anchor) const;

  /// Constant-velocity extrapolation of each agent's last observed state,
  /// [A, t_f, 2]; the trajectory heads predict residuals to it.
  static Tensor motion_anchor(const scenedata::SceneSample& sample, std::size_t t_f);

  /// Mask hiding invalid history steps, [A, n_queries, T_h].
  static Tensor history_mask(const scenedata::SceneSample& sample, std::size_t n_queries);

  // Exposed for tests that hand-set weights.
  struct Heads {
    std::vector<Mlp> trajectory;
    std::vector<Mlp> covariance;
    Mlp mode;
  };
  Heads& heads() noexcept { return heads_; }
  const std::vector<DecoderBlock>& decoder_blocks() const noexcept { return decoder_; }
  const std::vector<GineLayer>& gine_layers() const noexcept { return gine_; }
  Tensor queries() const noexcept { return queries_; }

 private:
  ModelConfig cfg_;
  ParameterStore store_;
  Linear agent_input_;
  std::vector<EncoderLayer> temporal_;
  Linear agent_node_;
  Linear road_node_;
  std::vector<GineLayer> gine_;
  std::vector<EncoderLayer> spatial_attn_;
  Tensor queries_;
  std::vector<DecoderBlock> decoder_;
  Heads heads_;
};

struct LossOptions {
  bool wta = true;
  double mode_ce_weight = 0.1;
};

struct SceneLoss {
  Tensor total;
  std::size_t winner = 0;
  std::vector<double> mode_nll;  // summed MGNLL per mode
  std::size_t n_terms = 0;       // valid (pair, step) terms per mode
  double winner_mean_nll() const { return n_terms ? mode_nll[winner] / static_cast<double>(n_terms) : 0.0; }
};

/// Per mode, sums MGNLL over valid (pair, step) terms with mu taken from
/// the predicted ego/other positions. With WTA the total is the smallest
/// mode sum plus mode_ce_weight times the cross-entropy of the mode logits
/// against that winner; otherwise the mixture negative log-likelihood.
SceneLoss scene_loss(const ForwardResult& out, const scenedata::SceneSample& sample, const LossOptions& opts);

}  // namespace pairpred::mapformer
