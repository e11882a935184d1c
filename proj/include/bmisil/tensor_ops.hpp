#pragma once

#include "bmisil/tensor.hpp"

#include <cstddef>
#include <vector>

namespace bmisil::nn {

// Layer primitives. Convolutions are cross-correlations with zero padding.
// All loops run in a fixed order, so results are bit-reproducible.

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

struct ConvGrads {
    Tensor grad_x;
    Tensor grad_w;
    Tensor grad_b;
};

/// grad_x is left empty when `want_grad_x` is false (first layer).
ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad,
                          const Tensor& grad_out, bool want_grad_x = true);

struct PoolResult {
    Tensor pooled;
    /// Flat input index of each output's maximum (first in row-major window order on ties).
    std::vector<std::size_t> argmax;
};

PoolResult maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const std::vector<std::size_t>& argmax, const std::vector<std::size_t>& input_shape,
                           const Tensor& grad_out);

/// x[N,D] * w[D,U] + b[U]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
    Tensor grad_x;
    Tensor grad_w;
    Tensor grad_b;
};

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out);

Tensor relu_forward(const Tensor& x);
/// Gradient is zero where x <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor sigmoid_forward(const Tensor& x);
/// Takes the forward output s; gradient s * (1 - s).
Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out);

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

/// Mean squared error over all elements; grad = 2 (pred - target) / N.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace bmisil::nn
