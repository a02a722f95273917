#include "pairpred/mapformer/layers.hpp"

#include <cmath>

#include "pairpred/errors.hpp"

namespace pairpred::mapformer {

namespace {
constexpr double kMaskedLogit = -1e9;
}

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) {
  Linear l;
  l.weight = store.create_uniform(name + ".weight", {in, out}, in, rng);
  l.bias = store.create_uniform(name + ".bias", {out}, in, rng);
  return l;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, std::size_t dim) {
  return {store.create_constant(name + ".gain", {dim}, 1.0), store.create_constant(name + ".bias", {dim}, 0.0)};
}

Mlp Mlp::create(ParameterStore& store, const std::string& name, const std::vector<std::size_t>& widths,
                std::mt19937_64& rng) {
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.layers.push_back(Linear::create(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng));
  }
  return m;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = diff::relu(h);
  }
  return h;
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name, std::size_t d_model,
                                              std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || d_model % heads != 0) throw ValidationError("d_model must be divisible by n_heads");
  MultiHeadAttention a;
  a.query = Linear::create(store, name + ".q", d_model, d_model, rng);
  a.key = Linear::create(store, name + ".k", d_model, d_model, rng);
  a.value = Linear::create(store, name + ".v", d_model, d_model, rng);
  a.out = Linear::create(store, name + ".o", d_model, d_model, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& q, const Tensor& kv, const Tensor* mask) const {
  const std::size_t d = q.dim(-1), dh = d / heads;
  const Tensor Q = query(q), K = key(kv), V = value(kv);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> per_head;
  per_head.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = diff::slice(Q, -1, h * dh, (h + 1) * dh);
    const Tensor kh = diff::slice(K, -1, h * dh, (h + 1) * dh);
    const Tensor vh = diff::slice(V, -1, h * dh, (h + 1) * dh);
    Tensor scores = diff::scale(diff::bmm(qh, kh, true), inv_sqrt);
    if (mask) scores = diff::add(scores, *mask);
    per_head.push_back(diff::bmm(diff::softmax(scores, -1), vh));
  }
  return out(heads == 1 ? per_head[0] : diff::concat(per_head, -1));
}

Tensor key_padding_mask(std::size_t batch, std::size_t n_queries, std::size_t n_keys,
                        const std::vector<std::uint8_t>& key_valid) {
  if (key_valid.size() != batch * n_keys) throw DimensionError("key_padding_mask: validity size mismatch");
  std::vector<double> m(batch * n_queries * n_keys, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < n_queries; ++i)
      for (std::size_t j = 0; j < n_keys; ++j)
        if (!key_valid[b * n_keys + j]) m[(b * n_queries + i) * n_keys + j] = kMaskedLogit;
  return Tensor::from({batch, n_queries, n_keys}, std::move(m));
}

Tensor sinusoidal_encoding(std::size_t length, std::size_t d_model) {
  std::vector<double> pe(length * d_model);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
      pe[t * d_model + i] = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
    }
  return Tensor::from({length, d_model}, std::move(pe));
}

EncoderLayer EncoderLayer::create(ParameterStore& store, const std::string& name, std::size_t d_model,
                                  std::size_t heads, std::mt19937_64& rng) {
  EncoderLayer e;
  e.attention = MultiHeadAttention::create(store, name + ".attn", d_model, heads, rng);
  e.norm1 = LayerNorm::create(store, name + ".norm1", d_model);
  e.feed_forward = Mlp::create(store, name + ".ff", {d_model, 2 * d_model, d_model}, rng);
  e.norm2 = LayerNorm::create(store, name + ".norm2", d_model);
  return e;
}

Tensor EncoderLayer::operator()(const Tensor& x, const Tensor* mask) const {
  const Tensor h = norm1(diff::add(x, attention(x, x, mask)));
  return norm2(diff::add(h, feed_forward(h)));
}

Tensor gine_aggregate(const Tensor& h, const Tensor& edge_embedding, const std::vector<std::size_t>& src,
                      const std::vector<std::size_t>& dst) {
  if (src.empty()) return h;
  const Tensor messages = diff::relu(diff::add(diff::gather_rows(h, src), edge_embedding));
  return diff::add(h, diff::scatter_add_rows(messages, dst, h.dim(0)));
}

GineLayer GineLayer::create(ParameterStore& store, const std::string& name, std::size_t d_model,
                            std::size_t edge_features, std::mt19937_64& rng) {
  GineLayer g;
  g.edge_projection = Linear::create(store, name + ".edge", edge_features, d_model, rng);
  g.hidden = Linear::create(store, name + ".mlp.0", d_model, d_model, rng);
  g.hidden_norm = LayerNorm::create(store, name + ".mlp.norm", d_model);
  g.output = Linear::create(store, name + ".mlp.1", d_model, d_model, rng);
  return g;
}

Tensor GineLayer::mlp(const Tensor& x) const { return output(diff::relu(hidden_norm(hidden(x)))); }

Tensor GineLayer::operator()(const Tensor& h, const Tensor& edge_features, const std::vector<std::size_t>& src,
                             const std::vector<std::size_t>& dst) const {
  if (src.empty()) return mlp(h);
  return mlp(gine_aggregate(h, edge_projection(edge_features), src, dst));
}

DecoderBlock DecoderBlock::create(ParameterStore& store, const std::string& name, std::size_t d_model,
                                  std::size_t heads, bool with_spatial, std::mt19937_64& rng) {
  DecoderBlock b;
  b.self_attention = MultiHeadAttention::create(store, name + ".self", d_model, heads, rng);
  b.norm_self = LayerNorm::create(store, name + ".norm_self", d_model);
  if (with_spatial) {
    b.spatial_attention = MultiHeadAttention::create(store, name + ".spatial", d_model, heads, rng);
    b.norm_spatial = LayerNorm::create(store, name + ".norm_spatial", d_model);
  }
  b.temporal_attention = MultiHeadAttention::create(store, name + ".temporal", d_model, heads, rng);
  b.norm_temporal = LayerNorm::create(store, name + ".norm_temporal", d_model);
  b.feed_forward = Mlp::create(store, name + ".ff", {d_model, 2 * d_model, d_model}, rng);
  b.norm_ff = LayerNorm::create(store, name + ".norm_ff", d_model);
  return b;
}

Tensor DecoderBlock::operator()(const Tensor& x, const Tensor* spatial, const Tensor& temporal,
                                const Tensor* temporal_mask) const {
  Tensor h = norm_self(diff::add(x, self_attention(x, x)));
  if (spatial) h = norm_spatial(diff::add(h, spatial_attention(h, *spatial)));
  h = norm_temporal(diff::add(h, temporal_attention(h, temporal, temporal_mask)));
  return norm_ff(diff::add(h, feed_forward(h)));
}

}  // namespace pairpred::mapformer
