#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace drc::nn {

using Index = Eigen::Index;

/// Raised whenever operand shapes are incompatible. The message names the
/// offending dimension so failures are reproducible from the log alone.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tensor shape, outermost dimension first. Spatial tensors use
/// height x width x channels, optionally with a leading batch dimension.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) { validate(); }

  int rank() const { return static_cast<int>(dims_.size()); }
  Index operator[](int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  Index back() const { return dims_.back(); }
  const std::vector<Index>& dims() const { return dims_; }

  Index numel() const {
    return std::accumulate(dims_.begin(), dims_.end(), Index{1}, std::multiplies<>());
  }

  bool operator==(const Shape& other) const = default;

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  void validate() const {
    if (dims_.size() > 4) throw ShapeError("tensor rank " + std::to_string(dims_.size()) + " exceeds 4");
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] < 1) {
        throw ShapeError("dimension " + std::to_string(i) + " must be positive, got " +
                         std::to_string(dims_[i]));
      }
    }
  }

  std::vector<Index> dims_;
};

/// Dense row-major tensor of rank <= 4. Storage is an Eigen column vector so
/// element-wise math can be written as Eigen array expressions; matrix views
/// over the trailing dimension are exposed through `matrix()`.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector::Zero(shape_.numel())) {}
  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_.str());
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }
  static Tensor from_values(Shape shape, std::initializer_list<Scalar> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar x : values) v(i++) = x;
    return Tensor(std::move(shape), std::move(v));
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return shape_.rank(); }
  Index dim(int axis) const { return shape_[axis]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector& vec() { return data_; }
  const Vector& vec() const { return data_; }
  auto array() { return data_.array(); }
  auto array() const { return data_.array(); }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_(i); }
  Scalar operator[](Index i) const { return data_(i); }

  /// Row-major [rows, cols] view where cols is the trailing dimension.
  MatrixMap matrix() { return MatrixMap(data_.data(), size() / shape_.back(), shape_.back()); }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), size() / shape_.back(), shape_.back());
  }

  /// Element access for rank-3 (h, w, c) and rank-4 (b, h, w, c) tensors.
  Scalar& at(Index y, Index x, Index c) { return data_(offset3(y, x, c)); }
  Scalar at(Index y, Index x, Index c) const { return data_(offset3(y, x, c)); }
  Scalar& at(Index b, Index y, Index x, Index c) { return data_(offset4(b, y, x, c)); }
  Scalar at(Index b, Index y, Index x, Index c) const { return data_(offset4(b, y, x, c)); }

  Tensor reshaped(Shape shape) const {
    if (shape.numel() != size()) {
      throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Index offset3(Index y, Index x, Index c) const {
    return (y * shape_[1] + x) * shape_[2] + c;
  }
  Index offset4(Index b, Index y, Index x, Index c) const {
    return ((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c;
  }

  Shape shape_;
  Vector data_;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return;
  if (a.rank() != b.rank()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + a.str() + " vs " + b.str());
  }
  for (int i = 0; i < a.rank(); ++i) {
    if (a[i] != b[i]) {
      throw ShapeError(std::string(op) + ": dimension " + std::to_string(i) + " mismatch (" +
                       std::to_string(a[i]) + " vs " + std::to_string(b[i]) + ")");
    }
  }
}

}  // namespace drc::nn
