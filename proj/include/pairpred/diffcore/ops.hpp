#pragma once

#include <cstddef>
#include <vector>

#include "pairpred/diffcore/tensor.hpp"

// Differentiable tensor operations.
//
// Broadcasting is limited to leading-batch alignment: in binary elementwise
// ops the right operand must either match the left shape or equal a trailing
// suffix of it (e.g. a bias [d] added to [A, T, d]). Anything else throws
// DimensionError naming both shapes. Negative axes count from the back.
namespace pairpred::diff {

/// a [..., n, k] x w [k, m] -> [..., n, m]. The weight is shared over the
/// leading axes of `a`.
Tensor matmul(const Tensor& a, const Tensor& w);

/// Batched product: a [B, n, k] x b [B, k, m] -> [B, n, m].
/// With transpose_b, b is [B, m, k] and used as its transpose.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor concat(const std::vector<Tensor>& parts, int axis = -1);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);

Tensor softmax(const Tensor& a, int axis = -1);
Tensor log_softmax(const Tensor& a);
/// Reduces the last axis: log(sum(exp(a))).
Tensor logsumexp(const Tensor& a);
/// Normalizes over the last axis, then applies gain and bias of shape [d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor relu(const Tensor& a);
/// log(1 + exp(x)), evaluated without overflow.
Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);

/// x [n, d] -> [idx.size(), d], row r = x[idx[r]].
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
/// x [m, d] -> [n_rows, d], out[idx[r]] += x[r].
Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t n_rows);

}  // namespace pairpred::diff
