#include "pairpred/mapformer/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "pairpred/errors.hpp"
#include "pairpred/paircov.hpp"

namespace pairpred::mapformer {

namespace {

using scenedata::kAgentFeatures;

Tensor agent_history_features(const scenedata::SceneSample& s) {
  std::vector<double> v(s.history);
  for (std::size_t i = 0; i < v.size(); i += kAgentFeatures) {
    v[i + 0] /= kPositionScale;
    v[i + 1] /= kPositionScale;
    v[i + 4] /= kPositionScale;
  }
  return Tensor::from({s.n_agents(), s.t_h, kAgentFeatures}, std::move(v));
}

Tensor current_agent_features(const scenegraph::SceneGraph& g) {
  std::vector<double> v(g.agent_feat);
  for (std::size_t i = 0; i < v.size(); i += kAgentFeatures) {
    v[i + 0] /= kPositionScale;
    v[i + 1] /= kPositionScale;
    v[i + 4] /= kPositionScale;
  }
  return Tensor::from({g.n_agents, kAgentFeatures}, std::move(v));
}

Tensor road_features(const scenegraph::SceneGraph& g) {
  std::vector<double> v(g.road_feat);
  for (std::size_t i = 0; i < v.size(); i += scenegraph::kRoadFeatures) {
    v[i + 0] /= kPositionScale;
    v[i + 1] /= kPositionScale;
  }
  return Tensor::from({g.n_road(), scenegraph::kRoadFeatures}, std::move(v));
}

Tensor edge_features(const scenegraph::SceneGraph& g) {
  std::vector<double> v(g.edge_feat);
  for (std::size_t i = 0; i < v.size(); i += scenegraph::kEdgeFeatures) {
    v[i + scenegraph::kEdgeTypes] /= kPositionScale;
    v[i + scenegraph::kEdgeTypes + 1] /= kPositionScale;
  }
  return Tensor::from({g.n_edges(), scenegraph::kEdgeFeatures}, std::move(v));
}

// Node embeddings for agents followed by road nodes, [A + n_road, d].
Tensor node_embeddings(const scenegraph::SceneGraph& g, const Linear& agent_node, const Linear& road_node) {
  const Tensor agents = agent_node(current_agent_features(g));
  if (g.n_road() == 0) return agents;
  return diff::concat({agents, road_node(road_features(g))}, 0);
}

// Gathers [A, T, k] rows for (ego, other_j) pairs into [A-1, T, 2k].
Tensor pair_rows(const Tensor& per_agent, std::size_t ego, const std::vector<std::size_t>& others) {
  const std::size_t A = per_agent.dim(0), T = per_agent.dim(1), k = per_agent.dim(2);
  const Tensor flat = diff::reshape(per_agent, {A, T * k});
  const Tensor ego_rows = diff::reshape(diff::gather_rows(flat, std::vector<std::size_t>(others.size(), ego)),
                                        {others.size(), T, k});
  const Tensor other_rows = diff::reshape(diff::gather_rows(flat, others), {others.size(), T, k});
  return diff::concat({ego_rows, other_rows}, -1);
}

}  // namespace

std::string to_string(SaiEncoder e) {
  switch (e) {
    case SaiEncoder::none:
      return "none";
    case SaiEncoder::gnn:
      return "gnn";
    default:
      return "attention";
  }
}

SaiEncoder sai_encoder_from_string(const std::string& s) {
  if (s == "none") return SaiEncoder::none;
  if (s == "gnn") return SaiEncoder::gnn;
  if (s == "attention") return SaiEncoder::attention;
  throw ValidationError("saienc must be one of none|gnn|attention, got '" + s + "'");
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ValidationError("model.d_model must be a positive multiple of model.n_heads");
  }
  if (n_modes < 1) throw ValidationError("model.n_modes must be >= 1");
  if (n_dec < 1) throw ValidationError("model.n_dec must be >= 1");
  if (n_enc < 1) throw ValidationError("model.n_enc must be >= 1");
  if (saienc != SaiEncoder::none && n_gnn < 1) throw ValidationError("model.n_gnn must be >= 1");
  if (t_f < 1) throw ValidationError("model.t_f must be >= 1");
  if (!(sigma_bias > 0.0)) throw ValidationError("model.sigma_bias must be > 0");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d_model"] = d_model;
  j["n_heads"] = n_heads;
  j["n_dec"] = n_dec;
  j["n_gnn"] = n_gnn;
  j["n_enc"] = n_enc;
  j["n_modes"] = n_modes;
  j["saienc"] = mapformer::to_string(saienc);
  j["t_f"] = t_f;
  j["sigma_bias"] = sigma_bias;
  j["init_seed"] = init_seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.n_dec = j.at("n_dec").get<std::size_t>();
    c.n_gnn = j.at("n_gnn").get<std::size_t>();
    c.n_enc = j.at("n_enc").get<std::size_t>();
    c.n_modes = j.at("n_modes").get<std::size_t>();
    c.saienc = sai_encoder_from_string(j.at("saienc").get<std::string>());
    c.t_f = j.at("t_f").get<std::size_t>();
    c.sigma_bias = j.at("sigma_bias").get<double>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<double> PredictionOutput::mode_probabilities() const {
  std::vector<double> p(mode_logits.size());
  const double mx = *std::max_element(mode_logits.begin(), mode_logits.end());
  double z = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) z += (p[m] = std::exp(mode_logits[m] - mx));
  for (auto& x : p) x /= z;
  return p;
}

PredictionOutput to_prediction(const ForwardResult& fr, std::size_t ego_index) {
  PredictionOutput p;
  p.n_modes = fr.traj.size();
  p.n_agents = fr.traj.front().dim(0);
  p.t_f = fr.traj.front().dim(1);
  p.ego_index = ego_index;
  p.others = fr.others;
  for (const auto& t : fr.traj) p.traj.insert(p.traj.end(), t.values().begin(), t.values().end());
  for (const auto& c : fr.cov) p.cov_params.insert(p.cov_params.end(), c.values().begin(), c.values().end());
  p.mode_logits.assign(fr.mode_logits.values().begin(), fr.mode_logits.values().end());
  return p;
}

MapFormer::MapFormer(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.init_seed);
  const std::size_t d = cfg_.d_model;
  agent_input_ = Linear::create(store_, "temporal.input", kAgentFeatures, d, rng);
  for (std::size_t i = 0; i < cfg_.n_enc; ++i) {
    temporal_.push_back(EncoderLayer::create(store_, "temporal.layer" + std::to_string(i), d, cfg_.n_heads, rng));
  }
  if (cfg_.saienc != SaiEncoder::none) {
    agent_node_ = Linear::create(store_, "spatial.agent_input", kAgentFeatures, d, rng);
    road_node_ = Linear::create(store_, "spatial.road_input", scenegraph::kRoadFeatures, d, rng);
    for (std::size_t i = 0; i < cfg_.n_gnn; ++i) {
      const std::string name = "spatial.layer" + std::to_string(i);
      if (cfg_.saienc == SaiEncoder::gnn) {
        gine_.push_back(GineLayer::create(store_, name, d, scenegraph::kEdgeFeatures, rng));
      } else {
        spatial_attn_.push_back(EncoderLayer::create(store_, name, d, cfg_.n_heads, rng));
      }
    }
  }
  queries_ = store_.create_uniform("decoder.queries", {cfg_.t_f, d}, d, rng);
  for (std::size_t i = 0; i < cfg_.n_dec; ++i) {
    decoder_.push_back(DecoderBlock::create(store_, "decoder.block" + std::to_string(i), d, cfg_.n_heads,
                                            cfg_.saienc != SaiEncoder::none, rng));
  }
  for (std::size_t m = 0; m < cfg_.n_modes; ++m) {
    heads_.trajectory.push_back(Mlp::create(store_, "head.traj" + std::to_string(m), {d, d, d, 2}, rng));
  }
  for (std::size_t m = 0; m < cfg_.n_modes; ++m) {
    heads_.covariance.push_back(
        Mlp::create(store_, "head.cov" + std::to_string(m), {2 * d, d, d, paircov::kParamCount}, rng));
  }
  heads_.mode = Mlp::create(store_, "head.mode", {d, d, cfg_.n_modes}, rng);
}

Tensor MapFormer::history_mask(const scenedata::SceneSample& sample, std::size_t n_queries) {
  const std::size_t A = sample.n_agents(), T = sample.t_h;
  std::vector<std::uint8_t> valid(A * T);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t t = 0; t < T; ++t) valid[a * T + t] = sample.valid_at(a, t) ? 1 : 0;
  return key_padding_mask(A, n_queries, T, valid);
}

Tensor MapFormer::temporal_encode(const scenedata::SceneSample& sample) const {
  Tensor x = diff::add(agent_input_(agent_history_features(sample)), sinusoidal_encoding(sample.t_h, cfg_.d_model));
  const Tensor mask = history_mask(sample, sample.t_h);
  for (const auto& layer : temporal_) x = layer(x, &mask);
  return x;
}

Tensor MapFormer::spatial_encode_gnn(const scenegraph::SceneGraph& graph) const {
  if (gine_.empty()) throw UsageError("model was not built with a GNN spatial encoder");
  Tensor h = node_embeddings(graph, agent_node_, road_node_);
  const Tensor edges = edge_features(graph);
  for (const auto& layer : gine_) h = layer(h, edges, graph.edge_src, graph.edge_dst);
  return diff::slice(h, 0, 0, graph.n_agents);
}

Tensor MapFormer::spatial_encode_attn(const scenegraph::SceneGraph& graph) const {
  if (spatial_attn_.empty()) throw UsageError("model was not built with an attention spatial encoder");
  const Tensor nodes = node_embeddings(graph, agent_node_, road_node_);
  const std::size_t n = nodes.dim(0);
  Tensor x = diff::reshape(nodes, {1, n, cfg_.d_model});
  for (const auto& layer : spatial_attn_) x = layer(x);
  return diff::slice(diff::reshape(x, {n, cfg_.d_model}), 0, 0, graph.n_agents);
}

Tensor MapFormer::decode(const Tensor& temporal, const Tensor& spatial, const Tensor* temporal_mask) const {
  const std::size_t A = temporal.dim(0);
  Tensor x = diff::add(Tensor::zeros({A, cfg_.t_f, cfg_.d_model}), queries_);
  std::optional<Tensor> spatial3;
  if (spatial.defined() && cfg_.saienc != SaiEncoder::none) spatial3 = diff::reshape(spatial, {A, 1, cfg_.d_model});
  for (const auto& block : decoder_) x = block(x, spatial3 ? &*spatial3 : nullptr, temporal, temporal_mask);
  return x;
}

Tensor MapFormer::motion_anchor(const scenedata::SceneSample& sample, std::size_t t_f) {
  const std::size_t A = sample.n_agents(), last = sample.t_h - 1;
  std::vector<double> anchor(A * t_f * 2);
  for (std::size_t a = 0; a < A; ++a) {
    const double speed = sample.hist(a, last, 4);
    const double vx = speed * sample.hist(a, last, 2), vy = speed * sample.hist(a, last, 3);
    for (std::size_t t = 0; t < t_f; ++t) {
      const double dt = static_cast<double>(t + 1) * scenedata::kFrameDt;
      anchor[(a * t_f + t) * 2] = sample.current_x(a) + vx * dt;
      anchor[(a * t_f + t) * 2 + 1] = sample.current_y(a) + vy * dt;
    }
  }
  return Tensor::from({A, t_f, 2}, std::move(anchor));
}

ForwardResult MapFormer::predict_heads(const Tensor& decoded, std::size_t ego_index, const Tensor& anchor) const {
  const std::size_t A = decoded.dim(0), T = decoded.dim(1), d = decoded.dim(2);
  if (A < scenedata::kMinAgents) throw UsageError("pair prediction needs at least two agents");
  if (ego_index >= A) throw UsageError("ego index out of range");
  if (anchor.shape() != diff::Shape{A, T, 2}) throw DimensionError("anchor must be [A, T_f, 2]");

  ForwardResult out;
  for (std::size_t a = 0; a < A; ++a)
    if (a != ego_index) out.others.push_back(a);
  for (const auto& head : heads_.trajectory) {
    out.traj.push_back(diff::add(diff::scale(head(decoded), kPositionScale), anchor));
  }
  const Tensor pairs = pair_rows(decoded, ego_index, out.others);
  for (const auto& head : heads_.covariance) {
    const Tensor raw = head(pairs);
    const Tensor scales = diff::add_scalar(diff::softplus(diff::slice(raw, -1, 0, 4)), cfg_.sigma_bias);
    out.cov.push_back(diff::concat({scales, diff::slice(raw, -1, 4, paircov::kParamCount)}, -1));
  }
  const Tensor pooled = diff::mean(diff::reshape(decoded, {A * T, d}), 0);
  out.mode_logits = diff::reshape(heads_.mode(diff::reshape(pooled, {1, d})), {cfg_.n_modes});
  return out;
}

ForwardResult MapFormer::forward(const scenedata::SceneSample& sample, const scenegraph::SceneGraph* graph) const {
  if (sample.n_agents() < scenedata::kMinAgents) throw UsageError("scene needs at least two agents");
  const Tensor temporal = temporal_encode(sample);
  Tensor spatial;
  if (cfg_.saienc != SaiEncoder::none) {
    if (!graph) throw UsageError("spatial encoder requires a scene graph");
    spatial = cfg_.saienc == SaiEncoder::gnn ? spatial_encode_gnn(*graph) : spatial_encode_attn(*graph);
  }
  const Tensor mask = history_mask(sample, cfg_.t_f);
  const Tensor decoded = decode(temporal, spatial, &mask);
  return predict_heads(decoded, sample.ego_index, motion_anchor(sample, cfg_.t_f));
}

PredictionOutput MapFormer::predict(const scenedata::SceneSample& sample, const scenegraph::SceneGraph* graph) const {
  return to_prediction(forward(sample, graph), sample.ego_index);
}

SceneLoss scene_loss(const ForwardResult& out, const scenedata::SceneSample& sample, const LossOptions& opts) {
  const std::size_t A = sample.n_agents();
  const std::size_t T = out.traj.front().dim(1);
  if (T > sample.t_f) throw DimensionError("model horizon exceeds the sample's ground truth");
  const std::size_t P = out.others.size();
  const std::size_t ego = sample.ego_index;

  std::vector<double> gt(A * T * 2);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < 2; ++k) gt[(a * T + t) * 2 + k] = sample.future(a, t, k);
  const Tensor target = pair_rows(Tensor::from({A, T, 2}, std::move(gt)), ego, out.others);

  std::vector<double> mask(P * T);
  SceneLoss loss;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t t = 0; t < T; ++t) {
      const bool ok = sample.future_valid(ego, t) && sample.future_valid(out.others[p], t);
      mask[p * T + t] = ok ? 1.0 : 0.0;
      loss.n_terms += ok ? 1 : 0;
    }
  const Tensor mask_t = Tensor::from({P, T}, std::move(mask));

  std::vector<Tensor> per_mode;
  for (std::size_t m = 0; m < out.traj.size(); ++m) {
    const Tensor mu = pair_rows(out.traj[m], ego, out.others);
    const Tensor nll = diff::sum_all(diff::mul(paircov::mgnll_loss(out.cov[m], mu, target), mask_t));
    loss.mode_nll.push_back(nll.item());
    per_mode.push_back(nll);
  }
  loss.winner = static_cast<std::size_t>(
      std::min_element(loss.mode_nll.begin(), loss.mode_nll.end()) - loss.mode_nll.begin());

  if (opts.wta) {
    loss.total = per_mode[loss.winner];
    if (opts.mode_ce_weight != 0.0) {
      const Tensor log_p = diff::log_softmax(out.mode_logits);
      const Tensor ce = diff::scale(diff::slice(log_p, 0, loss.winner, loss.winner + 1), -opts.mode_ce_weight);
      loss.total = diff::add(loss.total, diff::reshape(ce, {}));
    }
  } else {
    // -log sum_m p_m exp(-nll_m)
    std::vector<Tensor> neg;
    for (auto& t : per_mode) neg.push_back(diff::reshape(diff::scale(t, -1.0), {1}));
    const Tensor joint = diff::add(diff::log_softmax(out.mode_logits), diff::concat(neg, 0));
    loss.total = diff::scale(diff::logsumexp(joint), -1.0);
  }
  return loss;
}

}  // namespace pairpred::mapformer
