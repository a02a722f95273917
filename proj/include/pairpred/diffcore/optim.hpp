#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pairpred/diffcore/tensor.hpp"

namespace pairpred::diff {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of trainable leaves. Order is creation order and is
/// what checkpoints and optimizer state are keyed on.
class ParameterStore {
 public:
  /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
  Tensor create_uniform(const std::string& name, Shape shape, std::size_t fan_in, std::mt19937_64& rng);
  Tensor create_constant(const std::string& name, Shape shape, double value);

  std::vector<NamedParameter>& entries() noexcept { return entries_; }
  const std::vector<NamedParameter>& entries() const noexcept { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t scalar_count() const;

  void zero_grad();
  /// Snapshot of all gradient buffers in parameter order.
  std::vector<std::vector<double>> gradients() const;

 private:
  Tensor add(const std::string& name, Tensor t);
  std::vector<NamedParameter> entries_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update. If any gradient is non-finite the step
/// is aborted with NumericError and neither params nor state change.
void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace pairpred::diff
