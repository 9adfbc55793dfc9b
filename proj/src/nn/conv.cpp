#include "drc/nn/conv.hpp"

#include <algorithm>
#include <string>

namespace drc::nn {

namespace {

// Upper bound on patch-matrix entries materialized at once.
constexpr Index kMaxPatchEntries = Index{1} << 22;

template <typename Scalar>
using RowMatrix = typename Tensor<Scalar>::RowMatrix;

// Fills `cols` with patches for images [b0, b0 + count). Row order is
// (image, out_y, out_x); column order is (ky, kx, cin), matching the
// row-major [K, K, Cin, Cout] kernel layout.
template <typename Scalar>
void im2col(const Scalar* input, const ConvGeometry& g, Index b0, Index count, RowMatrix<Scalar>& cols) {
  cols.resize(count * g.positions(), g.patch());
  const Index image_size = g.in_h * g.in_w * g.in_c;
  for (Index b = 0; b < count; ++b) {
    const Scalar* image = input + (b0 + b) * image_size;
    for (Index oy = 0; oy < g.out_h; ++oy) {
      for (Index ox = 0; ox < g.out_w; ++ox) {
        Scalar* row = cols.data() + ((b * g.out_h + oy) * g.out_w + ox) * g.patch();
        for (Index ky = 0; ky < g.kernel; ++ky) {
          const Index iy = oy * g.stride + ky - g.pad_top;
          Scalar* dst = row + ky * g.kernel * g.in_c;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.kernel * g.in_c, Scalar(0));
            continue;
          }
          for (Index kx = 0; kx < g.kernel; ++kx) {
            const Index ix = ox * g.stride + kx - g.pad_left;
            Scalar* cell = dst + kx * g.in_c;
            if (ix < 0 || ix >= g.in_w) {
              std::fill(cell, cell + g.in_c, Scalar(0));
            } else {
              const Scalar* src = image + (iy * g.in_w + ix) * g.in_c;
              std::copy(src, src + g.in_c, cell);
            }
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, const ConvGeometry& g, Index b0, Index count, Scalar* grad_input) {
  const Index image_size = g.in_h * g.in_w * g.in_c;
  for (Index b = 0; b < count; ++b) {
    Scalar* image = grad_input + (b0 + b) * image_size;
    for (Index oy = 0; oy < g.out_h; ++oy) {
      for (Index ox = 0; ox < g.out_w; ++ox) {
        const Scalar* row = cols.data() + ((b * g.out_h + oy) * g.out_w + ox) * g.patch();
        for (Index ky = 0; ky < g.kernel; ++ky) {
          const Index iy = oy * g.stride + ky - g.pad_top;
          if (iy < 0 || iy >= g.in_h) continue;
          for (Index kx = 0; kx < g.kernel; ++kx) {
            const Index ix = ox * g.stride + kx - g.pad_left;
            if (ix < 0 || ix >= g.in_w) continue;
            const Scalar* src = row + (ky * g.kernel + kx) * g.in_c;
            Scalar* dst = image + (iy * g.in_w + ix) * g.in_c;
            for (Index c = 0; c < g.in_c; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.pad_top == 0 && g.pad_left == 0;
}

Index images_per_chunk(const ConvGeometry& g) {
  const Index per_image = std::max<Index>(1, g.positions() * g.patch());
  return std::clamp<Index>(kMaxPatchEntries / per_image, 1, g.batch);
}

}  // namespace

Index conv_output_size(Index in, Index kernel, Index stride, Padding padding) {
  if (padding == Padding::same) return (in + stride - 1) / stride;
  return (in - kernel) / stride + 1;
}

ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, Index stride, Padding padding) {
  if (input.rank() != 3 && input.rank() != 4) {
    throw ShapeError("conv2d: input must be [H, W, C] or [B, H, W, C], got " + input.str());
  }
  if (kernel.rank() != 4 || kernel[0] != kernel[1]) {
    throw ShapeError("conv2d: kernel must be square [K, K, Cin, Cout], got " + kernel.str());
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1, got " + std::to_string(stride));

  ConvGeometry g;
  g.batched = input.rank() == 4;
  const int o = g.batched ? 1 : 0;
  g.batch = g.batched ? input[0] : 1;
  g.in_h = input[o];
  g.in_w = input[o + 1];
  g.in_c = input[o + 2];
  g.kernel = kernel[0];
  g.stride = stride;
  g.out_c = kernel[3];
  if (kernel[2] != g.in_c) {
    throw ShapeError("conv2d: input channels (dimension " + std::to_string(o + 2) + ") = " +
                     std::to_string(g.in_c) + " but kernel expects Cin = " + std::to_string(kernel[2]));
  }
  if (padding == Padding::valid && (g.in_h < g.kernel || g.in_w < g.kernel)) {
    throw ShapeError("conv2d: VALID padding needs input spatial dims >= kernel size " +
                     std::to_string(g.kernel) + ", got " + input.str());
  }
  g.out_h = conv_output_size(g.in_h, g.kernel, stride, padding);
  g.out_w = conv_output_size(g.in_w, g.kernel, stride, padding);
  if (padding == Padding::same) {
    g.pad_top = std::max<Index>((g.out_h - 1) * stride + g.kernel - g.in_h, 0) / 2;
    g.pad_left = std::max<Index>((g.out_w - 1) * stride + g.kernel - g.in_w, 0) / 2;
  }
  return g;
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& kernel,
                      const Tensor<Scalar>* bias, Index stride, Padding padding) {
  const ConvGeometry g = conv_geometry(input.shape(), kernel.shape(), stride, padding);
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.out_c)) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(g.out_c) + "], got " + bias->shape().str());
  }
  Tensor<Scalar> out(g.output_shape());
  auto weights = kernel.vec().data();
  Eigen::Map<const RowMatrix<Scalar>> w(weights, g.patch(), g.out_c);
  Eigen::Map<RowMatrix<Scalar>> y(out.data(), g.batch * g.positions(), g.out_c);

  if (is_pointwise(g)) {
    Eigen::Map<const RowMatrix<Scalar>> x(input.data(), g.batch * g.positions(), g.in_c);
    y.noalias() = x * w;
  } else {
    RowMatrix<Scalar> cols;
    const Index chunk = images_per_chunk(g);
    for (Index b0 = 0; b0 < g.batch; b0 += chunk) {
      const Index count = std::min(chunk, g.batch - b0);
      im2col(input.data(), g, b0, count, cols);
      y.middleRows(b0 * g.positions(), count * g.positions()).noalias() = cols * w;
    }
  }
  if (bias) y.rowwise() += bias->vec().transpose();
  return out;
}

template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& kernel,
                     const Tensor<Scalar>& grad_output, const ConvGeometry& g,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_kernel,
                     Tensor<Scalar>* grad_bias) {
  require_same_shape(grad_output.shape(), g.output_shape(), "conv2d_backward");
  Eigen::Map<const RowMatrix<Scalar>> w(kernel.data(), g.patch(), g.out_c);
  Eigen::Map<const RowMatrix<Scalar>> dy(grad_output.data(), g.batch * g.positions(), g.out_c);

  if (grad_bias) grad_bias->vec() += dy.colwise().sum().transpose();

  if (is_pointwise(g)) {
    Eigen::Map<const RowMatrix<Scalar>> x(input.data(), g.batch * g.positions(), g.in_c);
    if (grad_kernel) {
      Eigen::Map<RowMatrix<Scalar>> dw(grad_kernel->data(), g.patch(), g.out_c);
      dw.noalias() += x.transpose() * dy;
    }
    if (grad_input) {
      Eigen::Map<RowMatrix<Scalar>> dx(grad_input->data(), g.batch * g.positions(), g.in_c);
      dx.noalias() += dy * w.transpose();
    }
    return;
  }

  RowMatrix<Scalar> cols;
  RowMatrix<Scalar> dcols;
  const Index chunk = images_per_chunk(g);
  for (Index b0 = 0; b0 < g.batch; b0 += chunk) {
    const Index count = std::min(chunk, g.batch - b0);
    const auto dy_chunk = dy.middleRows(b0 * g.positions(), count * g.positions());
    if (grad_kernel) {
      im2col(input.data(), g, b0, count, cols);
      Eigen::Map<RowMatrix<Scalar>> dw(grad_kernel->data(), g.patch(), g.out_c);
      dw.noalias() += cols.transpose() * dy_chunk;
    }
    if (grad_input) {
      dcols.noalias() = dy_chunk * w.transpose();
      col2im_add(dcols, g, b0, count, grad_input->data());
    }
  }
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>*, Index, Padding);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>*, Index, Padding);
template void conv2d_backward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              const ConvGeometry&, Tensor<float>*, Tensor<float>*, Tensor<float>*);
template void conv2d_backward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                              const ConvGeometry&, Tensor<double>*, Tensor<double>*, Tensor<double>*);

}  // namespace drc::nn
