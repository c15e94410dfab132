#include "tcgen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>
#include <utility>

#include "tcgen/error.hpp"
#include "tcgen/kernels.hpp"

namespace tcgen::ad {

namespace {

thread_local bool g_grad_enabled = true;

std::pair<std::size_t, std::size_t> matrix_dims(const Shape& s) {
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw Error(ErrorCode::kShapeMismatch,
              "matrix operation on rank-" + std::to_string(s.size()) + " tensor");
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + shape_string(a.shape()) +
                                             " vs " + shape_string(b.shape()));
}

// Wraps a forward result; records history only when some input needs it.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (g_grad_enabled)
    for (const auto& t : inputs) track = track || t.requires_grad();
  if (track) {
    node->requires_grad = true;
    for (auto& t : inputs) node->parents.push_back(t.handle());
    node->backward_fn = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it does not want one.
std::vector<double>* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != numel(shape))
    throw Error(ErrorCode::kShapeMismatch, std::to_string(values.size()) +
                                               " values for shape " + shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

std::size_t Tensor::rows() const { return matrix_dims(shape()).first; }
std::size_t Tensor::cols() const { return matrix_dims(shape()).second; }

double Tensor::item() const {
  if (size() != 1)
    throw Error(ErrorCode::kShapeMismatch, "item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return from(shape(), node_->value); }

void Tensor::backward() const {
  if (size() != 1)
    throw Error(ErrorCode::kShapeMismatch, "backward() needs a scalar, got " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Post-order DFS; reversed it is a topological order from the output.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (auto* g = parent_grad(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * s;
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  const std::size_t m = a.rows(), n = a.cols();
  if (row.size() != n) shape_error("add_row", a, row);
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += row.values()[j];
  return make_result(a.shape(), std::move(out), {a, row}, [m, n](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  const std::size_t m = a.rows(), n = a.cols();
  if (row.size() != n) shape_error("mul_row", a, row);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.values()[i * n + j] * row.values()[j];
  return make_result(a.shape(), std::move(out), {a, row}, [m, n](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& rv = self.parents[1]->value;
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += self.grad[i * n + j] * rv[j];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j] * av[i * n + j];
  });
}

Tensor repeat_rows(const Tensor& row, std::size_t m) {
  const std::size_t n = row.size();
  std::vector<double> out;
  out.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i) out.insert(out.end(), row.values().begin(), row.values().end());
  return make_result({m, n}, std::move(out), {row}, [m, n](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul", a, b);
  std::vector<double> out(m * n);
  kernels::parallel::gemm(a.values(), b.values(), out, m, k, n, false);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    if (auto* g = parent_grad(self, 0))  // dA = G B^T
      kernels::parallel::gemm_nt(self.grad, self.parents[1]->value, *g, m, n, k, true);
    if (auto* g = parent_grad(self, 1))  // dB = A^T G
      kernels::parallel::gemm_tn(self.parents[0]->value, self.grad, *g, k, m, n, true);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_error("matmul_nt", a, b);
  std::vector<double> out(m * n);
  kernels::parallel::gemm_nt(a.values(), b.values(), out, m, k, n, false);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    if (auto* g = parent_grad(self, 0))  // dA = G B
      kernels::parallel::gemm(self.grad, self.parents[1]->value, *g, m, n, k, true);
    if (auto* g = parent_grad(self, 1))  // dB = G^T A
      kernels::parallel::gemm_tn(self.grad, self.parents[0]->value, *g, n, m, k, true);
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += self.grad[j * m + i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  const std::size_t m = a.rows(), n = a.cols();
  if (start + count > n)
    throw Error(ErrorCode::kShapeMismatch, "slice_cols out of range for " + shape_string(a.shape()));
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(i * n + start), count,
                out.begin() + static_cast<std::ptrdiff_t>(i * count));
  return make_result({m, count}, std::move(out), {a}, [m, n, start, count](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) (*g)[i * n + start + j] += self.grad[i * count + j];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat_cols of nothing");
  const std::size_t m = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_error("concat_cols", parts.front(), p);
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(parts[k].values().begin() + static_cast<std::ptrdiff_t>(i * widths[k]), widths[k],
                  out.begin() + static_cast<std::ptrdiff_t>(i * total + offset));
    offset += widths[k];
  }
  return make_result({m, total}, std::move(out), parts, [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (auto* g = parent_grad(self, k))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j)
            (*g)[i * widths[k] + j] += self.grad[i * total + off + j];
      off += widths[k];
    }
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    out[i] = 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x)));
  }
  return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    const auto& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double x = xv[i];
      const double t = std::tanh(c * (x + k * x * x * x));
      const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
      (*g)[i] += self.grad[i] * d;
    }
  });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    out[i] = x / (1.0 + std::exp(-x));
  }
  return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    const auto& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-xv[i]));
      (*g)[i] += self.grad[i] * s * (1.0 + xv[i] * (1.0 - s));
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.values().data() + i * n;
    double* y = out.data() + i * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  return make_result(a.shape(), std::move(out), {a}, [m, n](Node& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.value.data() + i * n;
      const double* gy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.values().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (x[j] - mu) * inv_std[i];
  }
  return make_result(a.shape(), std::move(out), {a}, [m, n, inv_std](Node& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.value.data() + i * n;
      const double* gy = self.grad.data() + i * n;
      double mg = 0.0, mgy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mg += gy[j];
        mgy += gy[j] * y[j];
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += inv_std[i] * (gy[j] - mg - y[j] * mgy);
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result({}, {s}, {a}, [](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (double& v : *g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) shape_error("mse", prediction, target);
  const auto n = static_cast<double>(prediction.size());
  double s = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction.values()[i] - target.values()[i];
    s += d * d;
  }
  return make_result({}, {s / n}, {prediction, target}, [n](Node& self) {
    const auto& pv = self.parents[0]->value;
    const auto& tv = self.parents[1]->value;
    const double w = 2.0 * self.grad[0] / n;
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += w * (pv[i] - tv[i]);
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= w * (pv[i] - tv[i]);
  });
}

}  // namespace tcgen::ad
