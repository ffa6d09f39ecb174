// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csfm/errors.hpp"

namespace csfm {

/// Extent of a 4-D tensor in (n, c, h, w) order.
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  constexpr std::int64_t numel() const { return n * c * h * w; }
  constexpr std::int64_t plane() const { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

namespace detail {

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;

  T* ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T{0});
    return grad.data();
  }
};

}  // namespace detail

/// Dense row-major (n, c, h, w) array with an optional gradient buffer.
///
/// Copies share storage. Values are treated as immutable once an op has
/// produced them; only parameters are updated in place by the optimizer.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Node = detail::TensorNode<T>;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : node_(std::make_shared<Node>()) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
      throw ShapeError("negative tensor extent " + shape.str());
    node_->shape = shape;
    node_->data.assign(static_cast<std::size_t>(shape.numel()), fill);
  }

  Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<Node>()) {
    if (static_cast<std::int64_t>(values.size()) != shape.numel())
      throw ShapeError("data length " + std::to_string(values.size()) + " does not match shape " +
                       shape.str());
    node_->shape = shape;
    node_->data = std::move(values);
  }

  static Tensor zeros(Shape shape) { return Tensor(shape, T{0}); }
  static Tensor full(Shape shape, T value) { return Tensor(shape, value); }
  static Tensor scalar(T value) { return Tensor(Shape{1, 1, 1, 1}, value); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return node_->shape.numel(); }
  bool is_scalar() const { return shape() == Shape{1, 1, 1, 1}; }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T item() const {
    if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + shape().str());
    return node_->data[0];
  }

  std::int64_t index(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    const Shape& s = shape();
    return ((n * s.c + c) * s.h + h) * s.w + w;
  }
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return node_->data[static_cast<std::size_t>(index(n, c, h, w))];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool flag) {
    node_->requires_grad = flag;
    return *this;
  }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  // Grad buffers stay writable through const handles; values do not.
  std::span<T> mutable_grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() const { node_->grad.clear(); }

  /// Deep copy of the values with no gradient tracking.
  Tensor detach() const { return Tensor(shape(), node_->data); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of differentiable operations.
///
/// backward() walks the records in reverse and each rule adds its
/// contribution into the gradient buffers of its inputs, so a tensor consumed
/// by several ops receives the sum of all branch gradients.
template <typename T>
class Tape {
 public:
  using Node = detail::TensorNode<T>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape() {
    if (active_ == this) active_ = previous_;
  }

  /// Makes this tape the recording target for the current thread until the
  /// returned guard is destroyed.
  class Scope {
   public:
    explicit Scope(Tape& tape) : tape_(tape) {
      tape_.previous_ = active_;
      active_ = &tape_;
    }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    ~Scope() { active_ = tape_.previous_; }

   private:
    Tape& tape_;
  };

  static Tape* active() { return active_; }

  void record(std::shared_ptr<Node> output, std::function<void()> rule) {
    records_.push_back(Record{std::move(output), std::move(rule)});
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  void clear() { records_.clear(); }

  void backward(Tensor<T>& loss) {
    if (!loss.is_scalar()) throw ShapeError("backward() needs a scalar loss, got " + loss.shape().str());
    if (records_.empty()) {
      warn("backward() called on an empty tape; nothing to do");
      return;
    }
    auto& node = *loss.node();
    node.grad.assign(1, T{1});
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (it->output->grad.empty()) continue;
      it->rule();
    }
  }

 private:
  struct Record {
    std::shared_ptr<Node> output;
    std::function<void()> rule;
  };

  std::vector<Record> records_;
  Tape* previous_ = nullptr;
  static inline thread_local Tape* active_ = nullptr;
};

/// Backpropagates through the tape that is active on this thread.
template <typename T>
void backward(Tensor<T>& loss) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) {
    if (!loss.is_scalar()) throw ShapeError("backward() needs a scalar loss, got " + loss.shape().str());
    warn("backward() called with no active tape; nothing to do");
    return;
  }
  tape->backward(loss);
}

namespace detail {

template <typename T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  return false;
}

/// Registers `rule` for `out` on the active tape and marks `out` as tracked.
template <typename T, typename Rule>
void record(Tensor<T>& out, Rule&& rule) {
  out.set_requires_grad(true);
  Tape<T>::active()->record(out.node(), std::forward<Rule>(rule));
}

template <typename T>
void check_finite([[maybe_unused]] const Tensor<T>& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  for (T v : t.data())
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
#endif
}

}  // namespace detail

}  // namespace csfm
