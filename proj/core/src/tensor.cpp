// SPDX-License-Identifier: Apache-2.0

#include "mgt/tensor.hpp"

#include <string>
#include <unordered_set>

#include "mgt/error.hpp"

namespace mgt::nn {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::vector<double>& Tensor::Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (values.size() != nn::numel(shape)) {
    throw ShapeError("Tensor: " + std::to_string(values.size()) + " values for shape of size " +
                     std::to_string(nn::numel(shape)));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t count = nn::numel(shape);
  return constant(std::move(shape), std::vector<double>(count, value));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::from_matrix(const Matrix& m) { return constant({m.rows(), m.cols()}, m.values()); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("Tensor::item: tensor has " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->grad.size(), 0.0);
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

Matrix Tensor::to_matrix() const {
  if (rank() == 1) return Matrix(1, dim(0), node_->value);
  if (rank() != 2) throw ShapeError("Tensor::to_matrix: rank must be 1 or 2");
  return Matrix(dim(0), dim(1), node_->value);
}

Tensor Tensor::make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                           std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const Tensor& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (const Tensor& p : parents) node->parents.push_back(p.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  if (!node_ || numel() != 1) throw ShapeError("backward: loss must be a scalar");
  if (!node_->requires_grad) throw Error("backward: loss has no recorded operations");

  // Iterative post-order DFS gives a topological order of the recorded graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

}  // namespace mgt::nn
