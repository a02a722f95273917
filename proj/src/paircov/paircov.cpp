#include <cmath>
#include <numbers>

#include "pairpred/errors.hpp"
#include "pairpred/paircov.hpp"

namespace pairpred::paircov {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ln(2 pi) / 2

void require_finite(const CovParams& p) {
  for (double v : p.sigma_hat)
    if (!std::isfinite(v)) throw NumericError("non-finite covariance scale");
  for (double v : p.lower)
    if (!std::isfinite(v)) throw NumericError("non-finite covariance lower-triangle entry");
}

// Solves L z = r for the unit-lower-triangular L.
Vec4 forward_substitute(const CovParams& p, const Vec4& r) {
  const auto& [a, b, c, d, e, f] = p.lower;
  Vec4 z;
  z[0] = r[0];
  z[1] = r[1] - a * z[0];
  z[2] = r[2] - b * z[0] - c * z[1];
  z[3] = r[3] - d * z[0] - e * z[1] - f * z[2];
  return z;
}

}  // namespace

CovParams CovParams::from_span(std::span<const double> ten) {
  if (ten.size() != kParamCount) throw DimensionError("covariance parameter vector must have 10 entries");
  CovParams p;
  for (std::size_t i = 0; i < 4; ++i) p.sigma_hat[i] = ten[i];
  for (std::size_t i = 0; i < 6; ++i) p.lower[i] = ten[4 + i];
  return p;
}

std::array<double, kParamCount> CovParams::to_array() const {
  std::array<double, kParamCount> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = sigma_hat[i];
  for (std::size_t i = 0; i < 6; ++i) out[4 + i] = lower[i];
  return out;
}

Mat4 unit_lower(const CovParams& p) {
  const auto& [a, b, c, d, e, f] = p.lower;
  return Mat4{{{1, 0, 0, 0}, {a, 1, 0, 0}, {b, c, 1, 0}, {d, e, f, 1}}};
}

PairCovariance build_sigma(const CovParams& p) {
  require_finite(p);
  const Mat4 L = unit_lower(p);
  PairCovariance out;
  for (std::size_t i = 0; i < kDim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      // L is lower triangular, so only k <= min(i, j) contributes.
      for (std::size_t k = 0; k <= j; ++k) acc += L[i][k] * p.sigma_hat[k] * p.sigma_hat[k] * L[j][k];
      out.sigma[i][j] = acc;
      out.sigma[j][i] = acc;
    }
  }
  return out;
}

double mgnll(const CovParams& p, const Vec4& mu, const Vec4& x) {
  Vec4 r;
  for (std::size_t i = 0; i < kDim; ++i) r[i] = x[i] - mu[i];
  const Vec4 z = forward_substitute(p, r);
  double loss = kDim * kHalfLog2Pi;
  for (std::size_t i = 0; i < kDim; ++i) {
    const double s = p.sigma_hat[i];
    loss += std::log(s) + 0.5 * (z[i] * z[i]) / (s * s);
  }
  return loss;
}

double mgnll_with_gradient(const CovParams& p, const Vec4& mu, const Vec4& x, MgnllGradient& grad) {
  Vec4 r;
  for (std::size_t i = 0; i < kDim; ++i) r[i] = x[i] - mu[i];
  const Vec4 z = forward_substitute(p, r);
  const auto& [a, b, c, d, e, f] = p.lower;

  double loss = kDim * kHalfLog2Pi;
  Vec4 w;
  for (std::size_t i = 0; i < kDim; ++i) {
    const double s = p.sigma_hat[i];
    loss += std::log(s) + 0.5 * (z[i] * z[i]) / (s * s);
    w[i] = z[i] / (s * s);
    grad.params[i] = 1.0 / s - (z[i] * z[i]) / (s * s * s);
  }
  // g = L^{-T} w, the gradient of the quadratic term w.r.t. x - mu.
  Vec4 g;
  g[3] = w[3];
  g[2] = w[2] - f * g[3];
  g[1] = w[1] - c * g[2] - e * g[3];
  g[0] = w[0] - a * g[1] - b * g[2] - d * g[3];
  // d/dL_ij = -g_i z_j for the strictly lower entries.
  grad.params[4] = -g[1] * z[0];  // a
  grad.params[5] = -g[2] * z[0];  // b
  grad.params[6] = -g[2] * z[1];  // c
  grad.params[7] = -g[3] * z[0];  // d
  grad.params[8] = -g[3] * z[1];  // e
  grad.params[9] = -g[3] * z[2];  // f
  for (std::size_t i = 0; i < kDim; ++i) {
    grad.mu[i] = -g[i];
    grad.x[i] = g[i];
  }
  return loss;
}

double density(const CovParams& p, const Vec4& mu, const Vec4& x) { return std::exp(-mgnll(p, mu, x)); }

MarginalBlocks marginal_blocks(const PairCovariance& c) {
  MarginalBlocks out;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      out.ego[i][j] = c.sigma[i][j];
      out.other[i][j] = c.sigma[2 + i][2 + j];
      out.cross[i][j] = c.sigma[i][2 + j];
    }
  return out;
}

Vec4 sample(const CovParams& p, const Vec4& mu, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec4 y;
  for (std::size_t i = 0; i < kDim; ++i) y[i] = p.sigma_hat[i] * normal(rng);
  const Mat4 L = unit_lower(p);
  Vec4 out;
  for (std::size_t i = 0; i < kDim; ++i) {
    double acc = mu[i];
    for (std::size_t k = 0; k <= i; ++k) acc += L[i][k] * y[k];
    out[i] = acc;
  }
  return out;
}

double GaussianMixture::density(const Vec4& x) const {
  double acc = 0.0;
  for (const auto& m : components_) acc += m.weight * paircov::density(m.params, m.mu, x);
  return acc;
}

GaussianMixture mixture_combine(std::vector<MixtureComponent> modes) {
  if (modes.empty()) throw ValidationError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& m : modes) {
    if (!(m.weight >= 0.0)) throw ValidationError("mixture weight must be non-negative");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
  return GaussianMixture(std::move(modes));
}

}  // namespace pairpred::paircov
