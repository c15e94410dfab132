#pragma once

// Dense double-precision tensors with tape-free reverse-mode autodiff.
//
// A Tensor is a shared handle to a node. Operations on tensors that require
// gradients record their parents and a backward closure; `backward()` on a
// scalar walks the recorded graph in reverse topological order. Graphs are
// freed with the last handle to their output.
//
// Operations are matrix-oriented: rank-1 tensors act as 1 x n rows.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tcgen::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  /// Matrix view: rank 2 -> (s0, s1); rank 1 -> (1, s0); rank 0 -> (1, 1).
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient, or an empty span when none has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  /// Seeds d(this)/d(this) = 1 and back-propagates. Requires a single element.
  void backward() const;

  /// Same values, no graph history.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& handle() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Arithmetic. Shapes must match exactly unless stated.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// a (m x n) + row (1 x n), broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
/// a (m x n) * row (1 x n), broadcast over rows.
Tensor mul_row(const Tensor& a, const Tensor& row);
/// Stacks a 1 x n row m times.
Tensor repeat_rows(const Tensor& row, std::size_t m);

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)(n,k)^T
Tensor transpose(const Tensor& a);

// Column slicing and concatenation (feature axis).
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Nonlinearities and normalization.
Tensor gelu(const Tensor& a);  // tanh approximation
Tensor silu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
/// Per-row zero-mean unit-variance normalization without affine terms.
Tensor layer_norm_rows(const Tensor& a, double eps = 1e-6);

// Reductions to a scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse(const Tensor& prediction, const Tensor& target);

}  // namespace tcgen::ad
