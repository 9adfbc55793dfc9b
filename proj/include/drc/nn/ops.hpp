#pragma once

// Differentiable ops recorded on a Graph. Every op validates shapes eagerly
// and records a backward closure only when a parent needs a gradient.

#include "drc/nn/conv.hpp"
#include "drc/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace drc::nn {

enum class PoolMode { max, mean };

namespace detail {

template <typename Scalar>
Graph<Scalar>& graph_of(const Var<Scalar>& v) {
  if (!v.graph) throw std::invalid_argument("operation on an unbound variable");
  return *v.graph;
}

template <typename Scalar>
Graph<Scalar>& graph_of(std::span<const Var<Scalar>> vars) {
  if (vars.empty()) throw std::invalid_argument("operation needs at least one input");
  Graph<Scalar>& g = graph_of(vars.front());
  for (const auto& v : vars) {
    if (v.graph != &g) throw std::invalid_argument("inputs belong to different graphs");
  }
  return g;
}

// Rows x last-dim view helper shared by concat/slice ops.
inline Index leading(const Shape& s) { return s.numel() / s.back(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Element-wise arithmetic

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a);
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<Scalar> out(a.shape(), a.value().vec() + b.value().vec());
  return g.emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    g.accumulate(a, dy);
    g.accumulate(b, dy);
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a);
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<Scalar> out(a.shape(), a.value().vec() - b.value().vec());
  return g.emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    g.accumulate(a, dy);
    if (auto* db = g.grad_buffer(b)) db->vec() -= dy.vec();
  });
}

template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a);
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<Scalar> out(a.shape(), (a.value().array() * b.value().array()).matrix());
  return g.emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* da = g.grad_buffer(a)) da->array() += dy.array() * b.value().array();
    if (auto* db = g.grad_buffer(b)) db->array() += dy.array() * a.value().array();
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor) {
  auto& g = detail::graph_of(a);
  Tensor<Scalar> out(a.shape(), a.value().vec() * factor);
  return g.emit(std::move(out), {a}, [a, factor](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* da = g.grad_buffer(a)) da->vec() += dy.vec() * factor;
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) { return mul(a, b); }

// ---------------------------------------------------------------------------
// Nonlinearities

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(x.shape(), x.value().array().max(Scalar(0)).matrix());
  return g.emit(std::move(out), {x}, [x](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) {
      dx->array() += (x.value().array() > Scalar(0)).select(dy.array(), Scalar(0));
    }
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(x.shape(), (Scalar(1) / (Scalar(1) + (-x.value().array()).exp())).matrix());
  const int self = static_cast<int>(g.node_count());
  return g.emit(std::move(out), {x}, [x, self](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) {
      const auto& y = g.value(Var<Scalar>{&g, self}).array();
      dx->array() += dy.array() * y * (Scalar(1) - y);
    }
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(x.shape(), x.value().array().tanh().matrix());
  const int self = static_cast<int>(g.node_count());
  return g.emit(std::move(out), {x}, [x, self](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) {
      const auto& y = g.value(Var<Scalar>{&g, self}).array();
      dx->array() += dy.array() * (Scalar(1) - y.square());
    }
  });
}

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(x.shape(), x.value().array().exp().matrix());
  const int self = static_cast<int>(g.node_count());
  return g.emit(std::move(out), {x}, [x, self](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->array() += dy.array() * g.value(Var<Scalar>{&g, self}).array();
  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(x.shape(), x.value().array().square().matrix());
  return g.emit(std::move(out), {x}, [x](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->array() += Scalar(2) * dy.array() * x.value().array();
  });
}

// ---------------------------------------------------------------------------
// Linear layers

template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> kernel, Var<Scalar> bias, Index stride, Padding padding) {
  auto& g = detail::graph_of(x);
  const ConvGeometry geom = conv_geometry(x.shape(), kernel.shape(), stride, padding);
  const Tensor<Scalar>* b = bias.valid() ? &bias.value() : nullptr;
  Tensor<Scalar> out = conv2d(x.value(), kernel.value(), b, stride, padding);
  std::vector<Var<Scalar>> parents{x, kernel};
  if (bias.valid()) parents.push_back(bias);
  return g.emit(std::move(out), parents, [x, kernel, bias, geom](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    conv2d_backward(x.value(), kernel.value(), dy, geom, g.grad_buffer(x), g.grad_buffer(kernel),
                    bias.valid() ? g.grad_buffer(bias) : nullptr);
  });
}

/// x [R, F] times w [F, O] plus optional bias [O].
template <typename Scalar>
Var<Scalar> dense(Var<Scalar> x, Var<Scalar> w, Var<Scalar> bias) {
  auto& g = detail::graph_of(x);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.rank() != 2) throw ShapeError("dense: input must be [R, F], got " + xs.str());
  if (ws.rank() != 2 || ws[0] != xs[1]) {
    throw ShapeError("dense: input features (dimension 1) = " + std::to_string(xs[1]) +
                     " do not match weight " + ws.str());
  }
  if (bias.valid() && (bias.shape().rank() != 1 || bias.shape()[0] != ws[1])) {
    throw ShapeError("dense: bias must be [" + std::to_string(ws[1]) + "], got " + bias.shape().str());
  }
  Tensor<Scalar> out(Shape{xs[0], ws[1]});
  out.matrix().noalias() = x.value().matrix() * w.value().matrix();
  if (bias.valid()) out.matrix().rowwise() += bias.value().vec().transpose();
  std::vector<Var<Scalar>> parents{x, w};
  if (bias.valid()) parents.push_back(bias);
  return g.emit(std::move(out), parents, [x, w, bias](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->matrix().noalias() += dy.matrix() * w.value().matrix().transpose();
    if (auto* dw = g.grad_buffer(w)) dw->matrix().noalias() += x.value().matrix().transpose() * dy.matrix();
    if (bias.valid()) {
      if (auto* db = g.grad_buffer(bias)) db->vec() += dy.matrix().colwise().sum().transpose();
    }
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> x, Shape shape) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out = x.value().reshaped(shape);
  return g.emit(std::move(out), {x}, [x](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->vec() += dy.vec();
  });
}

/// [B, ...] -> [B, prod(...)].
template <typename Scalar>
Var<Scalar> flatten(Var<Scalar> x) {
  const Shape& s = x.shape();
  if (s.rank() < 2) throw ShapeError("flatten: needs a leading batch dimension, got " + s.str());
  return reshape(x, Shape{s[0], s.numel() / s[0]});
}

/// Concatenates along the trailing (channel) dimension.
template <typename Scalar>
Var<Scalar> concat_last(std::span<const Var<Scalar>> parts) {
  auto& g = detail::graph_of(parts);
  const Shape& first = parts.front().shape();
  const Index rows = detail::leading(first);
  Index total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.rank() != first.rank() || detail::leading(s) != rows) {
      throw ShapeError("concat_last: leading dimensions differ: " + first.str() + " vs " + s.str());
    }
    for (int i = 0; i + 1 < s.rank(); ++i) {
      if (s[i] != first[i]) {
        throw ShapeError("concat_last: dimension " + std::to_string(i) + " mismatch (" +
                         std::to_string(first[i]) + " vs " + std::to_string(s[i]) + ")");
      }
    }
    total += s.back();
  }
  std::vector<Index> dims = first.dims();
  dims.back() = total;
  Tensor<Scalar> out{Shape(dims)};
  auto om = out.matrix();
  Index col = 0;
  for (const auto& p : parts) {
    const Index c = p.shape().back();
    om.middleCols(col, c) = p.value().matrix();
    col += c;
  }
  std::vector<Var<Scalar>> parents(parts.begin(), parts.end());
  return g.emit(std::move(out), parents, [parents](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    const auto dm = dy.matrix();
    Index col = 0;
    for (const auto& p : parents) {
      const Index c = p.shape().back();
      if (auto* dx = g.grad_buffer(p)) dx->matrix() += dm.middleCols(col, c);
      col += c;
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_last(std::initializer_list<Var<Scalar>> parts) {
  std::vector<Var<Scalar>> v(parts);
  return concat_last(std::span<const Var<Scalar>>(v));
}

/// Channels [begin, begin + count) of the trailing dimension.
template <typename Scalar>
Var<Scalar> slice_last(Var<Scalar> x, Index begin, Index count) {
  auto& g = detail::graph_of(x);
  const Shape& s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.back()) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside trailing dimension " + std::to_string(s.back()));
  }
  std::vector<Index> dims = s.dims();
  dims.back() = count;
  Tensor<Scalar> out{Shape(dims)};
  out.matrix() = x.value().matrix().middleCols(begin, count);
  return g.emit(std::move(out), {x}, [x, begin, count](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->matrix().middleCols(begin, count) += dy.matrix();
  });
}

/// Entries [begin, begin + count) of the leading (batch) dimension.
template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> x, Index begin, Index count) {
  auto& g = detail::graph_of(x);
  const Shape& s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s[0]) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside dimension 0 of size " + std::to_string(s[0]));
  }
  std::vector<Index> dims = s.dims();
  dims[0] = count;
  const Index stride = s.numel() / s[0];
  Tensor<Scalar> out{Shape(dims)};
  out.vec() = x.value().vec().segment(begin * stride, count * stride);
  return g.emit(std::move(out), {x}, [x, begin, count, stride](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->vec().segment(begin * stride, count * stride) += dy.vec();
  });
}

/// Concatenates along the leading dimension.
template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  auto& g = detail::graph_of(parts);
  const Shape& first = parts.front().shape();
  Index rows = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.rank() != first.rank()) throw ShapeError("concat_rows: rank mismatch " + first.str() + " vs " + s.str());
    for (int i = 1; i < s.rank(); ++i) {
      if (s[i] != first[i]) {
        throw ShapeError("concat_rows: dimension " + std::to_string(i) + " mismatch (" +
                         std::to_string(first[i]) + " vs " + std::to_string(s[i]) + ")");
      }
    }
    rows += s[0];
  }
  std::vector<Index> dims = first.dims();
  dims[0] = rows;
  Tensor<Scalar> out{Shape(dims)};
  Index offset = 0;
  for (const auto& p : parts) {
    out.vec().segment(offset, p.value().size()) = p.value().vec();
    offset += p.value().size();
  }
  std::vector<Var<Scalar>> parents(parts.begin(), parts.end());
  return g.emit(std::move(out), parents, [parents](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    Index offset = 0;
    for (const auto& p : parents) {
      const Index n = p.shape().numel();
      if (auto* dx = g.grad_buffer(p)) dx->vec() += dy.vec().segment(offset, n);
      offset += n;
    }
  });
}

/// Multiplies batch entry b of x by the constant mask[b].
template <typename Scalar>
Var<Scalar> scale_rows(Var<Scalar> x, std::vector<Scalar> mask) {
  auto& g = detail::graph_of(x);
  const Shape& s = x.shape();
  if (static_cast<Index>(mask.size()) != s[0]) {
    throw ShapeError("scale_rows: mask length " + std::to_string(mask.size()) + " vs dimension 0 = " +
                     std::to_string(s[0]));
  }
  const Index stride = s.numel() / s[0];
  Tensor<Scalar> out = x.value();
  for (Index b = 0; b < s[0]; ++b) out.vec().segment(b * stride, stride) *= mask[static_cast<std::size_t>(b)];
  return g.emit(std::move(out), {x}, [x, mask = std::move(mask), stride](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) {
      for (std::size_t b = 0; b < mask.size(); ++b) {
        const Index at = static_cast<Index>(b) * stride;
        dx->vec().segment(at, stride) += dy.vec().segment(at, stride) * mask[b];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Spatial pooling and tiling over [B, H, W, C] (or unbatched [H, W, C])

namespace detail {

struct SpatialDims {
  Index batch, positions, channels;
  bool batched;
};

inline SpatialDims spatial_dims(const Shape& s, const char* op) {
  if (s.rank() == 3) return {1, s[0] * s[1], s[2], false};
  if (s.rank() == 4) return {s[0], s[1] * s[2], s[3], true};
  throw ShapeError(std::string(op) + ": expected [H, W, C] or [B, H, W, C], got " + s.str());
}

}  // namespace detail

/// Per-channel max or mean over all spatial positions -> [B, 1, 1, C].
template <typename Scalar>
Var<Scalar> pool_spatial(Var<Scalar> x, PoolMode mode) {
  auto& g = detail::graph_of(x);
  const auto d = detail::spatial_dims(x.shape(), "pool_spatial");
  Tensor<Scalar> out(d.batched ? Shape{d.batch, 1, 1, d.channels} : Shape{1, 1, d.channels});
  std::vector<Index> argmax;
  const Scalar* src = x.value().data();
  if (mode == PoolMode::max) argmax.resize(static_cast<std::size_t>(d.batch * d.channels));
  for (Index b = 0; b < d.batch; ++b) {
    Eigen::Map<const typename Tensor<Scalar>::RowMatrix> m(src + b * d.positions * d.channels, d.positions, d.channels);
    for (Index c = 0; c < d.channels; ++c) {
      if (mode == PoolMode::max) {
        Index at = 0;
        out[b * d.channels + c] = m.col(c).maxCoeff(&at);
        argmax[static_cast<std::size_t>(b * d.channels + c)] = at;
      } else {
        out[b * d.channels + c] = m.col(c).mean();
      }
    }
  }
  return g.emit(std::move(out), {x}, [x, d, mode, argmax = std::move(argmax)](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    auto* dx = g.grad_buffer(x);
    if (!dx) return;
    for (Index b = 0; b < d.batch; ++b) {
      Eigen::Map<typename Tensor<Scalar>::RowMatrix> m(dx->data() + b * d.positions * d.channels, d.positions, d.channels);
      for (Index c = 0; c < d.channels; ++c) {
        const Scalar gy = dy[b * d.channels + c];
        if (mode == PoolMode::max) {
          m(argmax[static_cast<std::size_t>(b * d.channels + c)], c) += gy;
        } else {
          m.col(c).array() += gy / static_cast<Scalar>(d.positions);
        }
      }
    }
  });
}

/// Broadcasts [B, 1, 1, C] over an H x W grid.
template <typename Scalar>
Var<Scalar> tile_spatial(Var<Scalar> x, Index height, Index width) {
  auto& g = detail::graph_of(x);
  const Shape& s = x.shape();
  const bool batched = s.rank() == 4;
  if ((s.rank() != 3 && s.rank() != 4) || s[batched ? 1 : 0] != 1 || s[batched ? 2 : 1] != 1) {
    throw ShapeError("tile_spatial: expected [B, 1, 1, C], got " + s.str());
  }
  const Index batch = batched ? s[0] : 1;
  const Index channels = s.back();
  const Index positions = height * width;
  Tensor<Scalar> out(batched ? Shape{batch, height, width, channels} : Shape{height, width, channels});
  for (Index b = 0; b < batch; ++b) {
    Eigen::Map<typename Tensor<Scalar>::RowMatrix> m(out.data() + b * positions * channels, positions, channels);
    m.rowwise() = x.value().vec().segment(b * channels, channels).transpose();
  }
  return g.emit(std::move(out), {x}, [x, batch, channels, positions](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    auto* dx = g.grad_buffer(x);
    if (!dx) return;
    for (Index b = 0; b < batch; ++b) {
      Eigen::Map<const typename Tensor<Scalar>::RowMatrix> m(dy.data() + b * positions * channels, positions, channels);
      dx->vec().segment(b * channels, channels) += m.colwise().sum().transpose();
    }
  });
}

// ---------------------------------------------------------------------------
// Distributions and reductions

/// Row-wise log-softmax of [R, A] logits.
template <typename Scalar>
Var<Scalar> log_softmax(Var<Scalar> logits) {
  auto& g = detail::graph_of(logits);
  const Shape& s = logits.shape();
  if (s.rank() != 2) throw ShapeError("log_softmax: expected [R, A], got " + s.str());
  Tensor<Scalar> out(s);
  const auto x = logits.value().matrix();
  auto y = out.matrix();
  for (Index r = 0; r < s[0]; ++r) {
    const Scalar m = x.row(r).maxCoeff();
    const Scalar lse = m + std::log((x.row(r).array() - m).exp().sum());
    y.row(r) = x.row(r).array() - lse;
  }
  const int self = static_cast<int>(g.node_count());
  return g.emit(std::move(out), {logits}, [logits, self](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    auto* dx = g.grad_buffer(logits);
    if (!dx) return;
    const auto y = g.value(Var<Scalar>{&g, self}).matrix();
    const auto d = dy.matrix();
    auto dm = dx->matrix();
    for (Index r = 0; r < y.rows(); ++r) {
      dm.row(r).array() += d.row(r).array() - y.row(r).array().exp() * d.row(r).sum();
    }
  });
}

/// Picks column index[r] from every row of [R, A] -> [R].
template <typename Scalar>
Var<Scalar> gather_cols(Var<Scalar> x, std::vector<int> index) {
  auto& g = detail::graph_of(x);
  const Shape& s = x.shape();
  if (s.rank() != 2 || static_cast<Index>(index.size()) != s[0]) {
    throw ShapeError("gather_cols: expected [R, A] with R = " + std::to_string(index.size()) + ", got " + s.str());
  }
  Tensor<Scalar> out(Shape{s[0]});
  for (Index r = 0; r < s[0]; ++r) {
    const int a = index[static_cast<std::size_t>(r)];
    if (a < 0 || a >= s[1]) throw ShapeError("gather_cols: index " + std::to_string(a) + " out of range");
    out[r] = x.value().matrix()(r, a);
  }
  return g.emit(std::move(out), {x}, [x, index = std::move(index)](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) {
      auto m = dx->matrix();
      for (std::size_t r = 0; r < index.size(); ++r) m(static_cast<Index>(r), index[r]) += dy[static_cast<Index>(r)];
    }
  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  auto& g = detail::graph_of(x);
  Tensor<Scalar> out(Shape{1});
  out[0] = x.value().vec().sum();
  return g.emit(std::move(out), {x}, [x](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->array() += dy[0];
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.value().size()));
}

/// sum(weights .* x) with constant weights.
template <typename Scalar>
Var<Scalar> weighted_sum(Var<Scalar> x, Tensor<Scalar> weights) {
  auto& g = detail::graph_of(x);
  require_same_shape(x.shape(), weights.shape(), "weighted_sum");
  Tensor<Scalar> out(Shape{1});
  out[0] = x.value().vec().dot(weights.vec());
  return g.emit(std::move(out), {x}, [x, weights = std::move(weights)](Graph<Scalar>& g, const Tensor<Scalar>& dy) {
    if (auto* dx = g.grad_buffer(x)) dx->vec() += weights.vec() * dy[0];
  });
}

}  // namespace drc::nn
