#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pairpred::diff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// One vertex of the backward graph. Values are row-major.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad();
};

/// Dense float64 tensor handle with reverse-mode gradient tracking.
///
/// Copies share storage; the graph is kept alive by the handles that
/// reference its output.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  /// Extent of `axis`; negative axes count from the back.
  std::size_t dim(int axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  /// Gradient buffer; all zeros when nothing has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  double item() const;

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void zero_grad();
  /// Same values, no graph history.
  Tensor detach() const;

  /// Accumulates d(this)/d(leaf) into every reachable leaf's grad.
  /// Throws UsageError unless this tensor holds exactly one element.
  void backward() const;

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// While alive, op results on this thread record no backward graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

namespace detail {

/// Builds an op result. Graph bookkeeping is skipped when no input needs
/// a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

}  // namespace detail

namespace testing {

/// While alive, softplus backward returns a deliberately wrong gradient.
/// Used to prove that gradient checks catch broken kernels.
class ScopedSoftplusFault {
 public:
  ScopedSoftplusFault();
  ~ScopedSoftplusFault();
  ScopedSoftplusFault(const ScopedSoftplusFault&) = delete;
  ScopedSoftplusFault& operator=(const ScopedSoftplusFault&) = delete;

 private:
  bool previous_;
};

bool softplus_fault_active() noexcept;

}  // namespace testing

}  // namespace pairpred::diff
