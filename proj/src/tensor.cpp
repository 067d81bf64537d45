/**
 * Copyright 2026 The himrae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "himrae/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "himrae/errors.hpp"

namespace himrae {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

namespace {

thread_local bool g_grad_enabled = true;

std::size_t rows_of(const Shape& s) { return s.empty() ? 1 : s[0]; }
std::size_t cols_of(const Shape& s) { return s.size() == 2 ? s[1] : 1; }

NodePtr make_node(Shape shape, std::vector<double> value) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  return n;
}

// Wires an op output into the tape when any input requires a gradient.
Tensor finish(NodePtr out, std::vector<NodePtr> parents, std::function<void(Node&)> bw) {
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    if (any) {
      out->requires_grad = true;
      out->parents = std::move(parents);
      out->backward = std::move(bw);
    }
  }
  return Tensor(std::move(out));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  auto node = make_node(a.shape(), std::move(out));
  return finish(node, {a.node_ptr()}, [dfdx](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * dfdx(p.value[i], o.value[i]);
  });
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, 0.0, requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(shape_size(shape), value));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("Tensor::from: shape " + shape_str(shape) + " holds " +
                     std::to_string(shape_size(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto n = make_node(shape, std::move(values));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }
std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor has " + std::to_string(size()) + " elements");
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
  // Shares nothing with the tape; the copy is cheap relative to the ops.
  return Tensor::from(shape(), node_->value);
}

Tensor Tensor::clone() const { return Tensor::from(shape(), node_->value, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a single-element tensor");
  }
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversed, it is a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(n * m);
  Map(out.data(), n, m).noalias() = MapC(a.node()->value.data(), n, k) * MapC(b.node()->value.data(), k, m);
  auto node = make_node({n, m}, std::move(out));
  return finish(node, {a.node_ptr(), b.node_ptr()}, [n, k, m](Node& o) {
    Node& pa = *o.parents[0];
    Node& pb = *o.parents[1];
    MapC g(o.grad.data(), n, m);
    if (pa.requires_grad) {
      Map(pa.ensure_grad().data(), n, k).noalias() += g * MapC(pb.value.data(), k, m).transpose();
    }
    if (pb.requires_grad) {
      Map(pb.ensure_grad().data(), k, m).noalias() += MapC(pa.value.data(), n, k).transpose() * g;
    }
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (bias.size() != m) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " vs input " + shape_str(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto& bv = bias.node()->value;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += bv[c];
  auto node = make_node(a.shape(), std::move(out));
  return finish(node, {a.node_ptr(), bias.node_ptr()}, [n, m](Node& o) {
    Node& pa = *o.parents[0];
    Node& pb = *o.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[c] += o.grad[r * m + c];
    }
  });
}

namespace {

template <typename F, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA da, DB db) {
  require_same(a, b, name);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  auto node = make_node(a.shape(), std::move(out));
  return finish(node, {a.node_ptr(), b.node_ptr()}, [da, db](Node& o) {
    Node& pa = *o.parents[0];
    Node& pb = *o.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * da(pa.value[i], pb.value[i]);
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * db(pa.value[i], pb.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  require_rank2(a, "mul_row");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (row.size() != m) {
    throw ShapeError("mul_row: row " + shape_str(row.shape()) + " vs " + shape_str(a.shape()));
  }
  const auto& av = a.node()->value;
  const auto& rv = row.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = av[r * m + c] * rv[c];
  auto node = make_node(a.shape(), std::move(out));
  return finish(node, {a.node_ptr(), row.node_ptr()}, [n, m](Node& o) {
    Node& pa = *o.parents[0];
    Node& pr = *o.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[r * m + c] += o.grad[r * m + c] * pr.value[c];
    }
    if (pr.requires_grad) {
      auto& g = pr.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[c] += o.grad[r * m + c] * pa.value[r * m + c];
    }
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  require_rank2(a, "mul_col");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (col.size() != n) {
    throw ShapeError("mul_col: column " + shape_str(col.shape()) + " vs " + shape_str(a.shape()));
  }
  const auto& av = a.node()->value;
  const auto& cv = col.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = av[r * m + c] * cv[r];
  auto node = make_node(a.shape(), std::move(out));
  return finish(node, {a.node_ptr(), col.node_ptr()}, [n, m](Node& o) {
    Node& pa = *o.parents[0];
    Node& pc = *o.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[r * m + c] += o.grad[r * m + c] * pc.value[r];
    }
    if (pc.requires_grad) {
      auto& g = pc.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) acc += o.grad[r * m + c] * pa.value[r * m + c];
        g[r] += acc;
      }
    }
  });
}

Tensor elu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log_clamped(const Tensor& a, double floor) {
  return unary(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x < floor ? 0.0 : 1.0 / x; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  auto node = make_node({}, {s});
  return finish(node, {a.node_ptr()}, [](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (auto& x : g) x += o.grad[0];
  });
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  require_same(a, b, "row_dot");
  require_rank2(a, "row_dot");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r] += av[r * m + c] * bv[r * m + c];
  auto node = make_node({n, 1}, std::move(out));
  return finish(node, {a.node_ptr(), b.node_ptr()}, [n, m](Node& o) {
    Node& pa = *o.parents[0];
    Node& pb = *o.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[r * m + c] += o.grad[r] * pb.value[r * m + c];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[r * m + c] += o.grad[r] * pa.value[r * m + c];
    }
  });
}

Tensor sum_squares(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  auto node = make_node({}, {s});
  return finish(node, {a.node_ptr()}, [](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.value[i] * o.grad[0];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != n) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].node()->value;
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }
  std::vector<NodePtr> parents;
  for (const auto& p : parts) parents.push_back(p.node_ptr());
  auto node = make_node({n, total}, std::move(out));
  return finish(node, std::move(parents), [n, total, widths](Node& o) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < o.parents.size(); ++k) {
      Node& p = *o.parents[k];
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) g[r * widths[k] + c] += o.grad[r * total + offset + c];
      }
      offset += widths[k];
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t width) {
  require_rank2(a, "slice_cols");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (start + width > m) throw ShapeError("slice_cols: range exceeds " + shape_str(a.shape()));
  const auto& av = a.node()->value;
  std::vector<double> out(n * width);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(av.data() + r * m + start, width, out.data() + r * width);
  auto node = make_node({n, width}, std::move(out));
  return finish(node, {a.node_ptr()}, [n, m, start, width](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < width; ++c) g[r * m + start + c] += o.grad[r * width + c];
  });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  auto node = make_node(shape, a.node()->value);
  return finish(node, {a.node_ptr()}, [](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_rank2(a, "gather_rows");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  std::vector<std::size_t> idx(index.begin(), index.end());
  const auto& av = a.node()->value;
  std::vector<double> out(idx.size() * m);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= n) throw ShapeError("gather_rows: index out of range");
    std::copy_n(av.data() + idx[k] * m, m, out.data() + k * m);
  }
  auto node = make_node({idx.size(), m}, std::move(out));
  return finish(node, {a.node_ptr()}, [idx = std::move(idx), m](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < m; ++c) g[idx[k] * m + c] += o.grad[k * m + c];
  });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t out_rows) {
  require_rank2(a, "scatter_add_rows");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (index.size() != n) throw ShapeError("scatter_add_rows: index length differs from rows");
  std::vector<std::size_t> idx(index.begin(), index.end());
  const auto& av = a.node()->value;
  std::vector<double> out(out_rows * m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (idx[k] >= out_rows) throw ShapeError("scatter_add_rows: index out of range");
    for (std::size_t c = 0; c < m; ++c) out[idx[k] * m + c] += av[k * m + c];
  }
  auto node = make_node({out_rows, m}, std::move(out));
  return finish(node, {a.node_ptr()}, [idx = std::move(idx), m](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < m; ++c) g[k * m + c] += o.grad[idx[k] * m + c];
  });
}

Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t segments) {
  if (a.cols() != 1 || segment.size() != a.rows()) {
    throw ShapeError("segment_max: expected a column vector with one segment id per row");
  }
  const auto& av = a.node()->value;
  std::vector<std::size_t> arg(segments, SIZE_MAX);
  for (std::size_t k = 0; k < av.size(); ++k) {
    const std::size_t s = segment[k];
    if (s >= segments) throw ShapeError("segment_max: segment id out of range");
    // Strict comparison keeps the lowest index on ties.
    if (arg[s] == SIZE_MAX || av[k] > av[arg[s]]) arg[s] = k;
  }
  std::vector<double> out(segments, 0.0);
  for (std::size_t s = 0; s < segments; ++s) out[s] = arg[s] == SIZE_MAX ? 0.0 : av[arg[s]];
  auto node = make_node({segments, 1}, std::move(out));
  return finish(node, {a.node_ptr()}, [arg = std::move(arg)](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t s = 0; s < arg.size(); ++s)
      if (arg[s] != SIZE_MAX) g[arg[s]] += o.grad[s];
  });
}

Tensor batch_norm(const Tensor& x, std::span<const double> mean, std::span<const double> var,
                  double eps, bool use_batch_stats, std::vector<double>* batch_mean,
                  std::vector<double>* batch_var) {
  require_rank2(x, "batch_norm");
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (mean.size() != m || var.size() != m) throw ShapeError("batch_norm: statistics width mismatch");
  const auto& xv = x.node()->value;
  std::vector<double> mu(mean.begin(), mean.end());
  std::vector<double> sigma2(var.begin(), var.end());
  if (use_batch_stats) {
    if (n == 0) throw ShapeError("batch_norm: empty batch");
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(sigma2.begin(), sigma2.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) mu[c] += xv[r * m + c];
    for (auto& v : mu) v /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        const double d = xv[r * m + c] - mu[c];
        sigma2[c] += d * d;
      }
    for (auto& v : sigma2) v /= static_cast<double>(n);
    if (batch_mean) *batch_mean = mu;
    if (batch_var) *batch_var = sigma2;
  }
  std::vector<double> inv_std(m);
  for (std::size_t c = 0; c < m; ++c) inv_std[c] = 1.0 / std::sqrt(sigma2[c] + eps);
  std::vector<double> out(n * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = (xv[r * m + c] - mu[c]) * inv_std[c];
  auto node = make_node(x.shape(), std::move(out));
  return finish(node, {x.node_ptr()}, [n, m, inv_std, use_batch_stats](Node& o) {
    Node& p = *o.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    if (!use_batch_stats) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) g[r * m + c] += o.grad[r * m + c] * inv_std[c];
      return;
    }
    // dx = inv_std * (dy - mean(dy) - y * mean(dy * y))
    std::vector<double> mean_dy(m, 0.0), mean_dy_y(m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        mean_dy[c] += o.grad[r * m + c];
        mean_dy_y[c] += o.grad[r * m + c] * o.value[r * m + c];
      }
    for (std::size_t c = 0; c < m; ++c) {
      mean_dy[c] /= static_cast<double>(n);
      mean_dy_y[c] /= static_cast<double>(n);
    }
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        const std::size_t i = r * m + c;
        g[i] += inv_std[c] * (o.grad[i] - mean_dy[c] - o.value[i] * mean_dy_y[c]);
      }
  });
}

}  // namespace ops
}  // namespace himrae
