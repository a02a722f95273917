#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pairpred/diffcore/ops.hpp"
#include "pairpred/diffcore/optim.hpp"

namespace pairpred::mapformer {

using diff::ParameterStore;
using diff::Tensor;

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return diff::add(diff::matmul(x, weight), bias); }
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm create(ParameterStore& store, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const { return diff::layer_norm(x, gain, bias); }
};

/// Linear layers with ReLU between them (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(ParameterStore& store, const std::string& name, const std::vector<std::size_t>& widths,
                    std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
};

struct MultiHeadAttention {
  Linear query, key, value, out;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name, std::size_t d_model,
                                   std::size_t heads, std::mt19937_64& rng);
  /// q [B, n, d], kv [B, m, d]; `mask` is an optional additive [B, n, m]
  /// tensor (0 keeps a key, a large negative value drops it).
  Tensor operator()(const Tensor& q, const Tensor& kv, const Tensor* mask = nullptr) const;
};

/// Additive attention mask that hides keys whose `key_valid` flag is 0.
/// key_valid is [B, m]; the result is [B, n_queries, m].
Tensor key_padding_mask(std::size_t batch, std::size_t n_queries, std::size_t n_keys,
                        const std::vector<std::uint8_t>& key_valid);

/// Standard sin/cos position table, [length, d_model].
Tensor sinusoidal_encoding(std::size_t length, std::size_t d_model);

/// Post-norm transformer encoder layer.
struct EncoderLayer {
  MultiHeadAttention attention;
  LayerNorm norm1;
  Mlp feed_forward;
  LayerNorm norm2;

  static EncoderLayer create(ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t heads,
                             std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const Tensor* mask = nullptr) const;
};

/// GINE neighbourhood term: h_v + sum_{u -> v} relu(h_u + e_uv).
Tensor gine_aggregate(const Tensor& h, const Tensor& edge_embedding, const std::vector<std::size_t>& src,
                      const std::vector<std::size_t>& dst);

/// One GINE message-passing layer: h_v' = MLP(h_v + sum relu(h_u + W e_uv)).
struct GineLayer {
  Linear edge_projection;
  Linear hidden;
  LayerNorm hidden_norm;
  Linear output;

  static GineLayer create(ParameterStore& store, const std::string& name, std::size_t d_model,
                          std::size_t edge_features, std::mt19937_64& rng);
  Tensor mlp(const Tensor& x) const;
  Tensor operator()(const Tensor& h, const Tensor& edge_features, const std::vector<std::size_t>& src,
                    const std::vector<std::size_t>& dst) const;
};

/// Factorized decoder block: self-attention over future steps, optional
/// cross-attention to the agent's spatial embedding, cross-attention to the
/// agent's history embeddings, then a feed-forward layer. Every sub-block
/// is residual and layer-normed.
struct DecoderBlock {
  MultiHeadAttention self_attention;
  LayerNorm norm_self;
  MultiHeadAttention spatial_attention;
  LayerNorm norm_spatial;
  MultiHeadAttention temporal_attention;
  LayerNorm norm_temporal;
  Mlp feed_forward;
  LayerNorm norm_ff;

  static DecoderBlock create(ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t heads,
                             bool with_spatial, std::mt19937_64& rng);
  /// x [A, T_f, d]; spatial [A, 1, d] or nullptr; temporal [A, T_h, d].
  Tensor operator()(const Tensor& x, const Tensor* spatial, const Tensor& temporal,
                    const Tensor* temporal_mask) const;
};

}  // namespace pairpred::mapformer
