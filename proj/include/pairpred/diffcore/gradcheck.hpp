#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pairpred/diffcore/tensor.hpp"

namespace pairpred::diff {

struct GradCheckOptions {
  double step = 1e-5;       // central-difference half width
  double tolerance = 1e-6;  // max allowed relative error
  // Denominator floor: err = |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-8;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t n_checked = 0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

/// Compares backward() of `loss_fn` against central finite differences for
/// every element of every tensor in `inputs`. `loss_fn` must rebuild the
/// graph from the current values of `inputs` on each call.
GradCheckResult check_gradients(const std::string& name, std::vector<Tensor> inputs,
                                const std::function<Tensor()>& loss_fn, const GradCheckOptions& opts = {});

}  // namespace pairpred::diff
