// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mgt/matrix.hpp"

namespace mgt::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);

/// Dense float64 tensor with reverse-mode differentiation.
///
/// A Tensor is a cheap handle; copies share storage. Operations on tensors
/// that require gradients record a node holding their parents and a backward
/// closure, so the graph of recorded operations is owned by the result. A
/// recorded graph must only be used from the thread that built it.
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    /// Gradient buffer, allocated (zeroed) on first use.
    std::vector<double>& grad_buffer();
  };

  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor from_matrix(const Matrix& m);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::span<const double> data() const { return node_->value; }
  /// In-place access for optimizers and finite-difference probes; never use on
  /// a tensor whose recorded consumers still need the old value.
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  /// Empty until a backward pass reaches this tensor.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  /// Reverse-mode pass from this scalar. Leaf gradients accumulate across
  /// calls; intermediate gradients are recomputed each call. Throws ShapeError
  /// for non-scalars and Error when nothing upstream was recorded.
  void backward() const;

  /// Copy of the values with no gradient history.
  Tensor detach() const;
  Matrix to_matrix() const;

  const std::shared_ptr<Node>& node() const { return node_; }

  /// Builds the result of an operation. Parents and the backward closure are
  /// kept only when gradient recording is on and some parent requires grad.
  static Tensor make_result(Shape shape, std::vector<double> value,
                            std::vector<Tensor> parents, std::function<void(Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Whether operations record gradient history on this thread.
bool grad_enabled();

/// Disables recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace mgt::nn
