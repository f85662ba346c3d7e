#pragma once

#include <span>
#include <vector>

#include "kebio/ndmath/tape.hpp"
#include "kebio/ndmath/tensor.hpp"

// Differentiable primitives. Everything the models compute is composed from
// this set; each op records its adjoint on the active Tape.
//
// 2-D ops accept rank-1 operands as single rows. Reductions accumulate in
// double before rounding back to `real`.
namespace kebio::inline KEBIO_PRECISION_NS::nd {

inline constexpr int kIgnoreIndex = -100;

/// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

/// [m x n] -> [n x m]
Tensor transpose(const Tensor& a);

/// Elementwise with broadcasting of a scalar or of a row whose length equals
/// the other operand's trailing extent.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

inline Tensor scale(const Tensor& a, real c) { return mul(a, Tensor::scalar(c)); }

/// Max-subtracted softmax along `axis` (negative counts from the back).
/// Throws NumericError on non-finite input.
Tensor softmax(const Tensor& x, int axis = -1);

/// Normalises each vector along the last axis, then applies gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  real eps);

/// x * Phi(x) with the exact Gaussian CDF, or the tanh approximation.
Tensor gelu(const Tensor& x, bool tanh_approximation = false);

/// Rows of a [V x d] table; adjoint scatters back into the gathered rows.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

/// Concatenates 2-D tensors along axis 0 (rows) or 1 (columns).
Tensor concat(std::span<const Tensor> parts, int axis);

/// Half-open range [begin, end) of a 2-D tensor along axis 0 or 1.
Tensor slice(const Tensor& x, int axis, std::size_t begin, std::size_t end);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean negative log-likelihood of `targets` under row-wise softmax of
/// `logits` [n x c]. Rows whose target is `ignore_index` do not count; when
/// every row is ignored the loss is 0 with zero gradient.
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            int ignore_index = kIgnoreIndex);

}  // namespace kebio::inline KEBIO_PRECISION_NS::nd
