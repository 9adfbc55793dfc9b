#pragma once

#include "drc/nn/tensor.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace drc::nn {

/// Named collection of parameter tensors keyed by dotted path
/// ("core.d0.gates.w"). Iteration order is lexicographic by path, which makes
/// every traversal (checkpointing, Adam, parameter counting) stable.
template <typename Scalar>
class ParameterSet {
 public:
  struct Entry {
    Tensor<Scalar> value;
    bool trainable = true;
  };
  using Map = std::map<std::string, Entry>;

  void add(const std::string& path, Tensor<Scalar> value, bool trainable = true) {
    if (path.empty()) throw std::invalid_argument("parameter path must not be empty");
    auto [it, inserted] = entries_.emplace(path, Entry{std::move(value), trainable});
    if (!inserted) throw std::invalid_argument("duplicate parameter path: " + path);
  }

  bool contains(const std::string& path) const { return entries_.count(path) != 0; }

  const Entry& entry(const std::string& path) const {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + path);
    return it->second;
  }
  Entry& entry(const std::string& path) {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + path);
    return it->second;
  }
  const Tensor<Scalar>& at(const std::string& path) const { return entry(path).value; }
  Tensor<Scalar>& at(const std::string& path) { return entry(path).value; }

  const Map& entries() const { return entries_; }
  Map& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::string> paths() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [path, _] : entries_) out.push_back(path);
    return out;
  }

  /// Number of trainable scalars.
  Index trainable_count() const {
    Index n = 0;
    for (const auto& [_, e] : entries_) {
      if (e.trainable) n += e.value.size();
    }
    return n;
  }

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (const auto& [path, e] : entries_) out.add(path, e.value.template cast<Other>(), e.trainable);
    return out;
  }

  bool operator==(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    for (; a != entries_.end(); ++a, ++b) {
      if (a->first != b->first || a->second.trainable != b->second.trainable ||
          !(a->second.value == b->second.value)) {
        return false;
      }
    }
    return true;
  }

 private:
  Map entries_;
};

/// Gradients of one loss evaluation. Only parameters the loss actually
/// touched appear; nothing is zero-filled.
template <typename Scalar>
using GradientRecord = std::map<std::string, Tensor<Scalar>>;

/// Global L2 norm across every tensor in the record.
template <typename Scalar>
Scalar global_norm(const GradientRecord<Scalar>& grads) {
  Scalar sq = 0;
  for (const auto& [_, g] : grads) sq += g.vec().squaredNorm();
  return std::sqrt(sq);
}

/// Rescales gradients in place so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename Scalar>
Scalar clip_by_global_norm(GradientRecord<Scalar>& grads, Scalar max_norm) {
  const Scalar norm = global_norm(grads);
  if (max_norm > 0 && norm > max_norm) {
    const Scalar factor = max_norm / norm;
    for (auto& [_, g] : grads) g.vec() *= factor;
  }
  return norm;
}

}  // namespace drc::nn
