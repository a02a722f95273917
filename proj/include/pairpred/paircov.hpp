#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "pairpred/diffcore/tensor.hpp"

// Joint Gaussian over the positions (x1, y1, x2, y2) of an agent pair.
//
// The covariance is parameterized as Sigma = L D L^T with
//
//       | 1 0 0 0 |        D = diag(s_x1^2, s_y1^2, s_x2^2, s_y2^2)
//   L = | a 1 0 0 |
//       | b c 1 0 |
//       | d e f 1 |
//
// so any finite (a..f) and any positive scales give a symmetric
// positive-definite matrix. Parameter vectors are laid out as
// (s_x1, s_y1, s_x2, s_y2, a, b, c, d, e, f).
namespace pairpred::paircov {

inline constexpr std::size_t kDim = 4;
inline constexpr std::size_t kParamCount = 10;

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;
using Mat2 = std::array<std::array<double, 2>, 2>;

struct CovParams {
  Vec4 sigma_hat{1.0, 1.0, 1.0, 1.0};
  std::array<double, 6> lower{};  // a, b, c, d, e, f

  static CovParams from_span(std::span<const double> ten);
  std::array<double, kParamCount> to_array() const;
};

struct PairCovariance {
  Mat4 sigma{};
};

struct MarginalBlocks {
  Mat2 ego{};     // rows/cols 0-1
  Mat2 other{};   // rows/cols 2-3
  Mat2 cross{};   // rows 0-1, cols 2-3
};

Mat4 unit_lower(const CovParams& p);

/// Sigma = L D L^T. Throws NumericError on non-finite input.
PairCovariance build_sigma(const CovParams& p);

/// Negative log-density of x under N(mu, Sigma):
///   (k/2) ln(2 pi) + sum_i ln s_i + 1/2 z^T D^{-1} z,  with L z = x - mu.
double mgnll(const CovParams& p, const Vec4& mu, const Vec4& x);

struct MgnllGradient {
  std::array<double, kParamCount> params{};
  Vec4 mu{};
  Vec4 x{};
};

/// mgnll plus its exact gradient w.r.t. the ten parameters, mu and x.
double mgnll_with_gradient(const CovParams& p, const Vec4& mu, const Vec4& x, MgnllGradient& grad);

double density(const CovParams& p, const Vec4& mu, const Vec4& x);

MarginalBlocks marginal_blocks(const PairCovariance& c);

/// x = mu + L D^{1/2} z with z ~ N(0, I).
Vec4 sample(const CovParams& p, const Vec4& mu, std::mt19937_64& rng);

struct MixtureComponent {
  double weight = 1.0;
  Vec4 mu{};
  CovParams params;
};

class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<MixtureComponent> components) : components_(std::move(components)) {}
  double density(const Vec4& x) const;
  const std::vector<MixtureComponent>& components() const noexcept { return components_; }

 private:
  std::vector<MixtureComponent> components_;
};

/// Throws ValidationError on a negative weight or when the weights do not
/// sum to 1 within 1e-9.
GaussianMixture mixture_combine(std::vector<MixtureComponent> modes);

/// Batched differentiable MGNLL. params [..., 10] (scales already
/// constrained positive), mu [..., 4], target [..., 4] -> [...].
diff::Tensor mgnll_loss(const diff::Tensor& params, const diff::Tensor& mu, const diff::Tensor& target);

}  // namespace pairpred::paircov
