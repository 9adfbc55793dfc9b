#pragma once

#include "drc/nn/tensor.hpp"

#include <cstddef>

namespace drc::nn {

enum class Padding { same, valid };

/// Resolved geometry of a 2-D convolution over an NHWC input.
/// SAME padding adds zeros, with the odd extra row/column on the bottom/right.
struct ConvGeometry {
  Index batch = 1;
  Index in_h = 0, in_w = 0, in_c = 0;
  Index kernel = 1, stride = 1;
  Index out_h = 0, out_w = 0, out_c = 0;
  Index pad_top = 0, pad_left = 0;
  bool batched = false;  // input carried a leading batch dimension

  Index patch() const { return kernel * kernel * in_c; }
  Index positions() const { return out_h * out_w; }
  Shape output_shape() const {
    return batched ? Shape{batch, out_h, out_w, out_c} : Shape{out_h, out_w, out_c};
  }
};

/// Output spatial size along one axis.
Index conv_output_size(Index in, Index kernel, Index stride, Padding padding);

/// Validates shapes and resolves padding. `kernel` is [K, K, Cin, Cout].
ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, Index stride, Padding padding);

/// Cross-correlation (the deep-learning "convolution") of an [H, W, Cin] or
/// [B, H, W, Cin] input with a [K, K, Cin, Cout] kernel. `bias` may be null.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& kernel,
                      const Tensor<Scalar>* bias, Index stride, Padding padding);

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& kernel, std::nullptr_t, Index stride,
                      Padding padding) {
  return conv2d<Scalar>(input, kernel, static_cast<const Tensor<Scalar>*>(nullptr), stride, padding);
}

/// Accumulates (+=) gradients of conv2d. Any output pointer may be null.
/// The patch matrix is rebuilt from `input` instead of being cached, which
/// keeps the memory of long unrolls proportional to the activations.
template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& kernel,
                     const Tensor<Scalar>& grad_output, const ConvGeometry& geometry,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_kernel,
                     Tensor<Scalar>* grad_bias);

}  // namespace drc::nn
