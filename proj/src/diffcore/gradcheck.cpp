#include "pairpred/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pairpred::diff {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const std::string& name, std::vector<Tensor> inputs,
                                const std::function<Tensor()>& loss_fn, const GradCheckOptions& opts) {
  for (auto& t : inputs) t.zero_grad();
  loss_fn().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradCheckResult result{name, 0.0, 0, true};
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto values = inputs[ti].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + opts.step;
      const double up = loss_fn().item();
      values[i] = saved - opts.step;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double err = relative_error(analytic[ti][i], numeric, opts.floor);
      // NaN must fail, so compare with the negated predicate.
      if (!(err <= result.max_rel_error)) result.max_rel_error = std::isnan(err) ? INFINITY : err;
      ++result.n_checked;
    }
  }
  result.passed = result.max_rel_error < opts.tolerance;
  return result;
}

}  // namespace pairpred::diff
