#pragma once

#include <span>
#include <vector>

#include "tsadv/rng.hpp"
#include "tsadv/tensor.hpp"

namespace tsadv {

// Primitive operation set. Each op computes its forward value in 64-bit
// arithmetic and, when a tape is active and an operand requires grad,
// records its backward rule. Shape mismatches throw an Error naming the op
// and both shapes.

/// {m,k} x {k,n} -> {m,n}
Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise, same shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// {r,c} + {c}: bias broadcast over rows.
Tensor add_bias(const Tensor& m, const Tensor& bias);
/// Scalar multiple.
Tensor scale(const Tensor& a, double s);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

/// Inverted dropout: keeps each unit with probability keep_prob and scales
/// kept units by 1/keep_prob. keep_prob must be in (0, 1]; keep_prob == 1 is
/// the identity and draws nothing from the stream.
Tensor dropout(const Tensor& x, double keep_prob, RngStream& rng);

/// Concatenate along axis 0 (stack rows) or 1 (stack cols) for 2-D tensors;
/// 1-D tensors concatenate along axis 0.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

/// Row r of a 2-D tensor as {1, c}; gradient scatters back into the source.
Tensor row(const Tensor& m, std::size_t r);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean of squared differences over all elements -> scalar.
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace tsadv
