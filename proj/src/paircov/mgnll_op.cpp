#include "pairpred/errors.hpp"
#include "pairpred/paircov.hpp"

namespace pairpred::paircov {

diff::Tensor mgnll_loss(const diff::Tensor& params, const diff::Tensor& mu, const diff::Tensor& target) {
  using diff::Shape;
  if (params.rank() < 1 || params.dim(-1) != kParamCount) {
    throw DimensionError("mgnll_loss: params must end in 10, got " + diff::to_string(params.shape()));
  }
  Shape batch(params.shape().begin(), params.shape().end() - 1);
  Shape vec_shape = batch;
  vec_shape.push_back(kDim);
  if (mu.shape() != vec_shape || target.shape() != vec_shape) {
    throw DimensionError("mgnll_loss: mu " + diff::to_string(mu.shape()) + " / target " +
                         diff::to_string(target.shape()) + " do not match params " + diff::to_string(params.shape()));
  }
  const std::size_t n = diff::numel(batch);
  std::vector<double> out(n);
  // Per-element gradients are cheap to keep and avoid a second solve.
  auto grads = std::make_shared<std::vector<MgnllGradient>>(n);
  const auto pv = params.values();
  const auto mv = mu.values();
  const auto tv = target.values();
  for (std::size_t i = 0; i < n; ++i) {
    const CovParams p = CovParams::from_span(pv.subspan(i * kParamCount, kParamCount));
    Vec4 m, x;
    for (std::size_t k = 0; k < kDim; ++k) {
      m[k] = mv[i * kDim + k];
      x[k] = tv[i * kDim + k];
    }
    out[i] = mgnll_with_gradient(p, m, x, (*grads)[i]);
  }
  return diff::detail::make_result(std::move(batch), std::move(out), {params, mu, target}, [n, grads](diff::Node& self) {
    diff::Node& pp = *self.parents[0];
    diff::Node& pm = *self.parents[1];
    diff::Node& pt = *self.parents[2];
    for (std::size_t i = 0; i < n; ++i) {
      const double go = self.grad[i];
      const auto& g = (*grads)[i];
      if (pp.requires_grad) {
        auto& gp = pp.ensure_grad();
        for (std::size_t k = 0; k < kParamCount; ++k) gp[i * kParamCount + k] += go * g.params[k];
      }
      if (pm.requires_grad) {
        auto& gm = pm.ensure_grad();
        for (std::size_t k = 0; k < kDim; ++k) gm[i * kDim + k] += go * g.mu[k];
      }
      if (pt.requires_grad) {
        auto& gt = pt.ensure_grad();
        for (std::size_t k = 0; k < kDim; ++k) gt[i * kDim + k] += go * g.x[k];
      }
    }
  });
}

}  // namespace pairpred::paircov
