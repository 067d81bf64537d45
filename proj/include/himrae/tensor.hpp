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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace himrae {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major float64 array with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Operations in
/// ops:: record a backward closure on their output whenever any input
/// requires a gradient, so the reverse-mode tape is rebuilt by every
/// forward pass and dropped with the last handle to the loss.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Leading extent; 1 for scalars.
  std::size_t rows() const;
  /// Trailing extent of a rank-2 tensor; 1 for rank 0/1.
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient buffer; zeros of the right size when nothing has accumulated.
  std::vector<double> grad() const;
  void zero_grad();

  /// Same values, no history.
  Tensor detach() const;
  /// Deep copy of the values, no history.
  Tensor clone() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables tape recording on this thread while alive.
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

/// Reverse pass from a single-element loss. Accumulates into the grad buffer
/// of every tensor reachable from `loss` that requires a gradient.
void backward(const Tensor& loss);

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
/// a[n x m] + bias[m] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// a[n x m] * row[m] broadcast over rows.
Tensor mul_row(const Tensor& a, const Tensor& row);
/// a[n x m] * col[n x 1] broadcast over columns.
Tensor mul_col(const Tensor& a, const Tensor& col);

Tensor elu(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
/// ln(max(a, floor)); zero gradient where a < floor.
Tensor log_clamped(const Tensor& a, double floor);

Tensor sum(const Tensor& a);
/// Row-wise inner product of two [n x m] tensors -> [n x 1].
Tensor row_dot(const Tensor& a, const Tensor& b);
/// Sum of squares of every element -> scalar.
Tensor sum_squares(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t width);
Tensor reshape(const Tensor& a, const Shape& shape);

/// out[k] = a[index[k]] (rows).
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
/// out[index[k]] += a[k] (rows); out has `out_rows` rows.
Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t out_rows);
/// Per-segment maximum of a column vector; gradient to the first argmax.
Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t segments);

/// Per-column batch normalisation over rows, without affine parameters.
/// Training mode uses batch statistics (biased variance); otherwise the
/// supplied running statistics.
Tensor batch_norm(const Tensor& x, std::span<const double> mean, std::span<const double> var,
                  double eps, bool use_batch_stats, std::vector<double>* batch_mean = nullptr,
                  std::vector<double>* batch_var = nullptr);

}  // namespace ops
}  // namespace himrae
