// SPDX-License-Identifier: Apache-2.0

#include "mgt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgt/error.hpp"

namespace mgt::nn {

using Node = Tensor::Node;

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void require_matrix(const Tensor& t, const char* op) {
  if (!t.defined() || t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " +
                     (t.defined() ? shape_str(t.shape()) : "undefined"));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

template <typename F>
Tensor unary(const Tensor& a, F f, std::function<void(Node&)> backward) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return Tensor::make_result(a.shape(), std::move(out), {a}, std::move(backward));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      if (xv == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xv * y[p * n + j];
    }
  }
  return Tensor::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& g = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb.value[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.value[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return Tensor::make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    auto& ga = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& ga = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& in = parent(self, p);
      if (!in.requires_grad) continue;
      auto& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& in = parent(self, p);
      if (!in.requires_grad) continue;
      const double sign = p == 0 ? 1.0 : -1.0;
      auto& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] -= self.grad[i] * pa.value[i] / (pb.value[i] * pb.value[i]);
      }
    }
  });
}

Tensor add_row_vector(const Tensor& a, const Tensor& bias) {
  require_matrix(a, "add_row_vector");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.numel() != n) throw ShapeError("add_row_vector: bias width mismatch");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.data()[j];
  return Tensor::make_result(a.shape(), std::move(out), {a, bias}, [m, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor mul_row_vector(const Tensor& a, const Tensor& scale_vec) {
  require_matrix(a, "mul_row_vector");
  const std::size_t m = a.rows(), n = a.cols();
  if (scale_vec.numel() != n) throw ShapeError("mul_row_vector: scale width mismatch");
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.data()[i * n + j] * scale_vec.data()[j];
  return Tensor::make_result(a.shape(), std::move(out), {a, scale_vec}, [m, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& ps = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] * ps.value[j];
    }
    if (ps.requires_grad) {
      auto& g = ps.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j] * pa.value[i * n + j];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a,
               [](double x) {
                 if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [](Node& self) {
                 auto& g = parent(self, 0).grad_buffer();
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   const double y = self.value[i];
                   g[i] += self.grad[i] * y * (1.0 - y);
                 }
               });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * in.value[i] * self.grad[i];
  });
}

Tensor softmax_rows(const Tensor& a) {
  require_matrix(a, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto x = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    double top = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) top = std::max(top, x[i * n + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(x[i * n + j] - top);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  return Tensor::make_result(a.shape(), std::move(out), {a}, [m, n](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * self.value[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        g[i * n + j] += self.value[i * n + j] * (self.grad[i * n + j] - dot);
      }
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::vector<std::size_t> offsets;
  std::size_t width = 0;
  for (const Tensor& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
    offsets.push_back(width);
    width += p.cols();
  }
  std::vector<double> out(m * width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * width + offsets[k] + j] = parts[k].data()[i * w + j];
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::make_result({m, width}, std::move(out), std::move(parents),
                             [m, width, offsets](Node& self) {
                               for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                 Node& in = parent(self, k);
                                 if (!in.requires_grad) continue;
                                 const std::size_t w = in.shape[1];
                                 auto& g = in.grad_buffer();
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < w; ++j)
                                     g[i * w + j] += self.grad[i * width + offsets[k] + j];
                               }
                             });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::vector<double> out;
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.cols() != n) throw ShapeError("concat_rows: column counts differ");
    out.insert(out.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::make_result({rows, n}, std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& in = parent(self, k);
      const std::size_t count = in.value.size();
      if (in.requires_grad) {
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < count; ++i) g[i] += self.grad[offset + i];
      }
      offset += count;
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
  require_matrix(a, "slice_rows");
  const std::size_t n = a.cols();
  if (start + count > a.rows()) throw ShapeError("slice_rows: range out of bounds");
  const auto first = a.data().begin() + static_cast<std::ptrdiff_t>(start * n);
  std::vector<double> out(first, first + static_cast<std::ptrdiff_t>(count * n));
  return Tensor::make_result({count, n}, std::move(out), {a}, [n, start, count](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < count * n; ++i) g[start * n + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  require_matrix(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (start + count > n) throw ShapeError("slice_cols: range out of bounds");
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = a.data()[i * n + start + j];
  return Tensor::make_result({m, count}, std::move(out), {a}, [m, n, start, count](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * n + start + j] += self.grad[i * count + j];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_matrix(a, "gather_rows");
  const std::size_t n = a.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(idx.size() * n);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= a.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t j = 0; j < n; ++j) out[k * n + j] = a.data()[idx[k] * n + j];
  }
  const std::size_t rows = idx.size();
  return Tensor::make_result({rows, n}, std::move(out), {a}, [idx = std::move(idx), n](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) g[idx[k] * n + j] += self.grad[k * n + j];
  });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index,
                        std::size_t out_rows) {
  require_matrix(a, "scatter_add_rows");
  if (index.size() != a.rows()) throw ShapeError("scatter_add_rows: index length mismatch");
  const std::size_t n = a.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(out_rows * n, 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= out_rows) throw ShapeError("scatter_add_rows: index out of range");
    for (std::size_t j = 0; j < n; ++j) out[idx[k] * n + j] += a.data()[k * n + j];
  }
  return Tensor::make_result({out_rows, n}, std::move(out), {a},
                             [idx = std::move(idx), n](Node& self) {
                               auto& g = parent(self, 0).grad_buffer();
                               for (std::size_t k = 0; k < idx.size(); ++k)
                                 for (std::size_t j = 0; j < n; ++j)
                                   g[k * n + j] += self.grad[idx[k] * n + j];
                             });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::make_result({1}, {total}, {a}, [](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_rows(const Tensor& a) {
  require_matrix(a, "sum_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.data()[i * n + j];
  return Tensor::make_result({1, n}, std::move(out), {a}, [m, n](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j];
  });
}

Tensor mean_rows(const Tensor& a) {
  require_matrix(a, "mean_rows");
  if (a.rows() == 0) throw ShapeError("mean_rows: no rows");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

Tensor max_rows(const Tensor& a) {
  require_matrix(a, "max_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 0) throw ShapeError("max_rows: no rows");
  std::vector<double> out(n);
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = a.data()[j];
    for (std::size_t i = 1; i < m; ++i) {
      if (a.data()[i * n + j] > out[j]) {
        out[j] = a.data()[i * n + j];
        arg[j] = i;
      }
    }
  }
  return Tensor::make_result({1, n}, std::move(out), {a}, [arg, n](Node& self) {
    auto& g = parent(self, 0).grad_buffer();
    for (std::size_t j = 0; j < n; ++j) g[arg[j] * n + j] += self.grad[j];
  });
}

Tensor frobenius_norm(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  const double norm = std::sqrt(acc);
  return Tensor::make_result({1}, {norm}, {a}, [norm](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    if (norm == 0.0) return;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * in.value[i] / norm;
  });
}

Tensor mean_row_entropy(const Tensor& probs) {
  require_matrix(probs, "mean_row_entropy");
  const std::size_t m = probs.rows();
  if (m == 0) throw ShapeError("mean_row_entropy: no rows");
  double total = 0.0;
  for (double p : probs.data()) {
    if (p > 0.0) total -= p * std::log(p);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  return Tensor::make_result({1}, {total * inv_m}, {probs}, [inv_m](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = in.value[i];
      if (p > 0.0) g[i] -= self.grad[0] * inv_m * (std::log(p) + 1.0);
    }
  });
}

Tensor mse_loss(const Tensor& pred, std::span<const double> target) {
  if (pred.numel() != target.size() || target.empty()) {
    throw ShapeError("mse_loss: prediction has " + std::to_string(pred.numel()) +
                     " entries, target " + std::to_string(target.size()));
  }
  std::vector<double> t(target.begin(), target.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = pred.data()[i] - t[i];
    acc += r * r;
  }
  const double inv = 1.0 / static_cast<double>(t.size());
  return Tensor::make_result({1}, {acc * inv}, {pred}, [t = std::move(t), inv](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * 2.0 * inv * (in.value[i] - t[i]);
  });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels) {
  if (logits.numel() != labels.size() || labels.empty()) {
    throw ShapeError("bce_with_logits: logits have " + std::to_string(logits.numel()) +
                     " entries, labels " + std::to_string(labels.size()));
  }
  std::vector<double> y(labels.begin(), labels.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = logits.data()[i];
    acc += std::max(x, 0.0) - x * y[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double inv = 1.0 / static_cast<double>(y.size());
  return Tensor::make_result({1}, {acc * inv}, {logits}, [y = std::move(y), inv](Node& self) {
    Node& in = parent(self, 0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = in.value[i];
      const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      g[i] += self.grad[0] * inv * (s - y[i]);
    }
  });
}

namespace {

// Standardizes `count` values spaced `stride` apart starting at `base`.
// Shared by the batch (per column) and layer (per row) variants.
struct Standardizer {
  std::size_t groups, count, group_stride, stride;

  std::size_t at(std::size_t group, std::size_t k) const { return group * group_stride + k * stride; }

  void forward(std::span<const double> x, double eps, std::vector<double>& out,
               std::vector<double>& inv_std, std::vector<double>* means,
               std::vector<double>* vars) const {
    for (std::size_t gi = 0; gi < groups; ++gi) {
      double mu = 0.0;
      for (std::size_t k = 0; k < count; ++k) mu += x[at(gi, k)];
      mu /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const double d = x[at(gi, k)] - mu;
        var += d * d;
      }
      var /= static_cast<double>(count);
      inv_std[gi] = 1.0 / std::sqrt(var + eps);
      for (std::size_t k = 0; k < count; ++k) out[at(gi, k)] = (x[at(gi, k)] - mu) * inv_std[gi];
      if (means) (*means)[gi] = mu;
      if (vars) (*vars)[gi] = var;
    }
  }

  void backward(const std::vector<double>& y, const std::vector<double>& gy,
                const std::vector<double>& inv_std, std::vector<double>& gx) const {
    const double c = static_cast<double>(count);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      double sum_g = 0.0, sum_gy = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        sum_g += gy[at(gi, k)];
        sum_gy += gy[at(gi, k)] * y[at(gi, k)];
      }
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = at(gi, k);
        gx[i] += inv_std[gi] * (gy[i] - sum_g / c - y[i] * sum_gy / c);
      }
    }
  }
};

Tensor standardize(const Tensor& x, double eps, const Standardizer& st, BatchStats* stats_out) {
  std::vector<double> out(x.numel());
  std::vector<double> inv_std(st.groups);
  std::vector<double> means(st.groups), vars(st.groups);
  st.forward(x.data(), eps, out, inv_std, &means, &vars);
  if (stats_out) *stats_out = BatchStats{means, vars};
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [st, inv_std = std::move(inv_std)](Node& self) {
                               st.backward(self.value, self.grad, inv_std,
                                           parent(self, 0).grad_buffer());
                             });
}

}  // namespace

Tensor batch_standardize(const Tensor& x, double eps, BatchStats* stats_out) {
  require_matrix(x, "batch_standardize");
  if (x.rows() == 0 || x.cols() == 0) throw ShapeError("batch_standardize: empty input");
  const Standardizer st{x.cols(), x.rows(), 1, x.cols()};
  return standardize(x, eps, st, stats_out);
}

Tensor layer_standardize(const Tensor& x, double eps) {
  require_matrix(x, "layer_standardize");
  if (x.rows() == 0 || x.cols() == 0) throw ShapeError("layer_standardize: empty input");
  const Standardizer st{x.rows(), x.cols(), x.cols(), 1};
  return standardize(x, eps, st, nullptr);
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
  std::vector<double> mask(x.numel());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mul(x, Tensor::constant(x.shape(), std::move(mask)));
}

}  // namespace mgt::nn
