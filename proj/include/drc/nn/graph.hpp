#pragma once

#include "drc/nn/parameters.hpp"
#include "drc/nn/tensor.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace drc::nn {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
class Graph;

/// Handle to a value recorded on a Graph.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr; }
  const Tensor<Scalar>& value() const { return graph->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape over the op set in ops.hpp.
///
/// Nodes are appended in evaluation order, so the tape is already a
/// topological order and backward() is a single reverse sweep. A graph built
/// with `record_gradients = false` stores values only; that is the mode the
/// actors use for inference.
template <typename Scalar>
class Graph {
 public:
  using T = Tensor<Scalar>;
  using V = Var<Scalar>;
  using BackwardFn = std::function<void(Graph&, const T& grad)>;

  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  V constant(T value) {
    Node& n = nodes_.emplace_back();
    n.owned = std::move(value);
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  /// Like constant() but references `value`, which must outlive the graph.
  V constant_ref(const T& value) {
    Node& n = nodes_.emplace_back();
    n.ref = &value;
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  /// Leaf bound to a parameter entry. Repeated requests for the same path
  /// return the same node, so gradients from every use accumulate together.
  V parameter(const ParameterSet<Scalar>& params, const std::string& path) {
    if (auto it = param_nodes_.find(path); it != param_nodes_.end()) return {this, it->second};
    const auto& entry = params.entry(path);
    Node& n = nodes_.emplace_back();
    n.ref = &entry.value;
    n.requires_grad = record_ && entry.trainable;
    n.param_path = path;
    const int id = static_cast<int>(nodes_.size() - 1);
    param_nodes_.emplace(path, id);
    return {this, id};
  }

  const T& value(V v) const {
    const Node& n = node(v);
    return n.ref ? *n.ref : n.owned;
  }

  bool requires_grad(V v) const { return node(v).requires_grad; }

  /// Appends an op result. The backward function is kept only when recording
  /// and at least one parent requires a gradient.
  V emit(T value, const std::vector<V>& parents, BackwardFn backward) {
    bool needs = false;
    if (record_) {
      for (const V& p : parents) needs = needs || node(p).requires_grad;
    }
    Node& n = nodes_.emplace_back();
    n.owned = std::move(value);
    n.requires_grad = needs;
    if (needs) n.backward = std::move(backward);
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  bool any_requires_grad(const std::vector<V>& vars) const {
    if (!record_) return false;
    for (const V& v : vars) {
      if (node(v).requires_grad) return true;
    }
    return false;
  }

  /// Gradient accumulator of `v`, zero-initialized on first use; nullptr when
  /// `v` does not require a gradient.
  T* grad_buffer(V v) {
    Node& n = node(v);
    if (!n.requires_grad) return nullptr;
    if (!n.has_grad) {
      n.grad = T(value(v).shape());
      n.has_grad = true;
    }
    return &n.grad;
  }

  void accumulate(V v, const T& delta) {
    if (T* g = grad_buffer(v)) {
      require_same_shape(g->shape(), delta.shape(), "accumulate");
      g->vec() += delta.vec();
    }
  }

  /// Runs the reverse sweep from a scalar loss.
  void backward(V loss) {
    const T& l = value(loss);
    if (l.size() != 1) throw ShapeError("backward: loss must be a scalar, got " + l.shape().str());
    if (!std::isfinite(static_cast<double>(l[0]))) {
      throw NonFiniteError("backward: loss is not finite (" + std::to_string(static_cast<double>(l[0])) + ")");
    }
    if (!record_) throw std::logic_error("backward: graph was built without gradient recording");
    if (T* g = grad_buffer(loss)) g->vec().setOnes();
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
  }

  /// Gradients of every trainable parameter that the last backward() reached.
  GradientRecord<Scalar> parameter_gradients() const {
    GradientRecord<Scalar> out;
    for (const auto& [path, id] : param_nodes_) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.has_grad) out.emplace(path, n.grad);
    }
    return out;
  }

 private:
  struct Node {
    T owned;
    const T* ref = nullptr;
    T grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    std::string param_path;
  };

  const Node& node(V v) const {
    if (v.graph != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw std::invalid_argument("variable does not belong to this graph");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  Node& node(V v) { return const_cast<Node&>(static_cast<const Graph&>(*this).node(v)); }

  std::deque<Node> nodes_;
  std::map<std::string, int> param_nodes_;
  bool record_;
};

/// Evaluates `loss_fn(graph)` on a fresh recording graph and returns the
/// analytic gradient of every trainable parameter the loss touched.
template <typename Scalar, typename LossFn>
GradientRecord<Scalar> compute_gradients(LossFn&& loss_fn, Scalar* loss_value = nullptr) {
  Graph<Scalar> graph(true);
  Var<Scalar> loss = loss_fn(graph);
  if (loss_value) *loss_value = graph.value(loss)[0];
  graph.backward(loss);
  return graph.parameter_gradients();
}

}  // namespace drc::nn
