// Copyright 2026 The CatHarm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catharm/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <tuple>

#include "catharm/common/error.hpp"

namespace catharm::numcore {
namespace {

using Index = Eigen::Index;

ConstMatrixMap view(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(t.data().data(), static_cast<Index>(rows),
                        static_cast<Index>(cols));
}

Tensor from_eigen(const RowMatrix& m, Shape shape) {
  return Tensor(std::move(shape),
                std::vector<double>(m.data(), m.data() + m.size()));
}

[[noreturn]] void shape_error(std::string_view op, const std::string& what) {
  fail(ErrorKind::kShapeMismatch, std::string(op) + ": " + what);
}

// ---------------------------------------------------------------------------

class MatMulOp final : public Operation {
 public:
  std::string_view name() const override { return "matmul"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& a = in[0];
    const Shape& b = in[1];
    if (a.empty() || b.empty() || a.size() > 2 || b.size() > 2) {
      shape_error(name(), "operands must be rank 1 or 2");
    }
    const std::size_t ka = a.back();
    const std::size_t kb = b.front();
    if (ka != kb) {
      shape_error(name(), shape_string(a) + " x " + shape_string(b));
    }
    Shape out;
    if (a.size() == 2) out.push_back(a[0]);
    if (b.size() == 2) out.push_back(b[1]);
    return out;
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    const auto [m, k, n] = dims(a, b);
    RowMatrix c = view(a, m, k) * view(b, k, n);
    return from_eigen(c, output_shape(std::vector<Shape>{a.shape(), b.shape()}));
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    const auto [m, k, n] = dims(a, b);
    auto G = view(g, m, n);
    RowMatrix da = G * view(b, k, n).transpose();
    RowMatrix db = view(a, m, k).transpose() * G;
    return {from_eigen(da, a.shape()), from_eigen(db, b.shape())};
  }

 private:
  static std::tuple<std::size_t, std::size_t, std::size_t> dims(const Tensor& a,
                                                                const Tensor& b) {
    const std::size_t m = a.rank() == 2 ? a.shape()[0] : 1;
    const std::size_t k = a.shape().back();
    const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
    return {m, k, n};
  }
};

// Shared by add/sub: sign applies to the second operand.
class AddOp final : public Operation {
 public:
  explicit AddOp(double sign) : sign_(sign) {}
  std::string_view name() const override { return sign_ > 0 ? "add" : "sub"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& a = in[0];
    const Shape& b = in[1];
    if (a == b) return a;
    if (a.size() == 2 &&
        ((b.size() == 1 && b[0] == a[1]) ||
         (b.size() == 2 && b[0] == 1 && b[1] == a[1]))) {
      return a;
    }
    shape_error(name(), shape_string(a) + " vs " + shape_string(b));
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    Tensor out = *in[0];
    const Tensor& b = *in[1];
    auto o = out.data();
    auto bv = b.data();
    if (b.size() == out.size()) {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += sign_ * bv[i];
    } else {
      const std::size_t cols = bv.size();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += sign_ * bv[i % cols];
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    const Tensor& b = *in[1];
    Tensor gb(b.shape());
    auto gv = g.data();
    auto d = gb.data();
    if (b.size() == g.size()) {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = sign_ * gv[i];
    } else {
      const std::size_t cols = d.size();
      for (std::size_t i = 0; i < gv.size(); ++i) d[i % cols] += sign_ * gv[i];
    }
    return {g, std::move(gb)};
  }

 private:
  double sign_;
};

class ScaleOp final : public Operation {
 public:
  explicit ScaleOp(double factor) : factor_(factor) {}
  std::string_view name() const override { return "scale"; }
  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }

  Tensor forward(std::span<const Tensor* const> in) override {
    Tensor out = *in[0];
    for (double& v : out.data()) v *= factor_;
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const>, const Tensor&,
                               const Tensor& g) override {
    Tensor out = g;
    for (double& v : out.data()) v *= factor_;
    return {std::move(out)};
  }

 private:
  double factor_;
};

enum class Activation { kTanh, kRelu, kSigmoid };

class ActivationOp final : public Operation {
 public:
  explicit ActivationOp(Activation kind) : kind_(kind) {}

  std::string_view name() const override {
    switch (kind_) {
      case Activation::kTanh: return "tanh";
      case Activation::kRelu: return "relu";
      case Activation::kSigmoid: return "sigmoid";
    }
    return "activation";
  }

  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }

  Tensor forward(std::span<const Tensor* const> in) override {
    Tensor out = *in[0];
    for (double& v : out.data()) {
      switch (kind_) {
        case Activation::kTanh: v = std::tanh(v); break;
        case Activation::kRelu: v = v > 0.0 ? v : 0.0; break;
        case Activation::kSigmoid:
          v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                       : std::exp(v) / (1.0 + std::exp(v));
          break;
      }
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor& y, const Tensor& g) override {
    Tensor out = g;
    auto o = out.data();
    auto yv = y.data();
    auto xv = in[0]->data();
    for (std::size_t i = 0; i < o.size(); ++i) {
      switch (kind_) {
        case Activation::kTanh: o[i] *= 1.0 - yv[i] * yv[i]; break;
        case Activation::kRelu: o[i] = xv[i] > 0.0 ? o[i] : 0.0; break;
        case Activation::kSigmoid: o[i] *= yv[i] * (1.0 - yv[i]); break;
      }
    }
    return {std::move(out)};
  }

 private:
  Activation kind_;
};

class SoftmaxCrossEntropyOp final : public Operation {
 public:
  explicit SoftmaxCrossEntropyOp(std::vector<int> labels)
      : labels_(std::move(labels)) {}
  std::string_view name() const override { return "softmax_cross_entropy"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& s = in[0];
    if (s.size() != 2 || s[0] != labels_.size()) {
      shape_error(name(), "logits " + shape_string(s) + " for " +
                              std::to_string(labels_.size()) + " labels");
    }
    for (int y : labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= s[1]) {
        fail(ErrorKind::kLabelOutOfRange,
             "label " + std::to_string(y) + " with " + std::to_string(s[1]) +
                 " classes");
      }
    }
    return {};
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    const Tensor& z = *in[0];
    const std::size_t m = z.rows();
    const std::size_t k = z.cols();
    probs_ = Tensor(z.shape());
    double loss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      double mx = z.at(r, 0);
      for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, z.at(r, c));
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) sum += std::exp(z.at(r, c) - mx);
      const double lse = mx + std::log(sum);
      for (std::size_t c = 0; c < k; ++c) {
        probs_.at(r, c) = std::exp(z.at(r, c) - lse);
      }
      loss += lse - z.at(r, static_cast<std::size_t>(labels_[r]));
    }
    return Tensor::scalar(loss / static_cast<double>(m));
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    const std::size_t m = in[0]->rows();
    Tensor d = probs_;
    for (std::size_t r = 0; r < m; ++r) {
      d.at(r, static_cast<std::size_t>(labels_[r])) -= 1.0;
    }
    const double f = g.item() / static_cast<double>(m);
    for (double& v : d.data()) v *= f;
    return {std::move(d)};
  }

 private:
  std::vector<int> labels_;
  Tensor probs_;
};

class SumSquaresOp final : public Operation {
 public:
  std::string_view name() const override { return "sum_squares"; }
  Shape output_shape(std::span<const Shape>) const override { return {}; }

  Tensor forward(std::span<const Tensor* const> in) override {
    double s = 0.0;
    for (double v : in[0]->data()) s += v * v;
    return Tensor::scalar(s);
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    Tensor d = *in[0];
    const double f = 2.0 * g.item();
    for (double& v : d.data()) v *= f;
    return {std::move(d)};
  }
};

class TransposeOp final : public Operation {
 public:
  std::string_view name() const override { return "transpose"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& s = in[0];
    if (s.size() == 2) return {s[1], s[0]};
    if (s.size() <= 1) return s;
    shape_error(name(), "rank > 2");
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    return flip(*in[0]);
  }

  std::vector<Tensor> backward(std::span<const Tensor* const>, const Tensor&,
                               const Tensor& g) override {
    return {flip(g)};
  }

 private:
  static Tensor flip(const Tensor& t) {
    if (t.rank() < 2) return t;
    RowMatrix m = t.matrix().transpose();
    return from_eigen(m, {t.shape()[1], t.shape()[0]});
  }
};

class ConcatOp final : public Operation {
 public:
  explicit ConcatOp(int axis) : axis_(axis) {}
  std::string_view name() const override { return "concat"; }

  Shape output_shape(std::span<const Shape> in) const override {
    if (in.empty()) shape_error(name(), "no operands");
    if (axis_ != 0 && axis_ != 1) shape_error(name(), "axis must be 0 or 1");
    Shape out = in[0];
    if (out.size() != 2) shape_error(name(), "operands must be rank 2");
    const std::size_t keep = axis_ == 0 ? 1 : 0;
    for (std::size_t i = 1; i < in.size(); ++i) {
      if (in[i].size() != 2 || in[i][keep] != out[keep]) {
        shape_error(name(), shape_string(in[i]) + " vs " + shape_string(out));
      }
      out[static_cast<std::size_t>(axis_)] += in[i][static_cast<std::size_t>(axis_)];
    }
    return out;
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    std::vector<Shape> shapes;
    for (const Tensor* t : in) shapes.push_back(t->shape());
    Tensor out(output_shape(shapes));
    std::size_t offset = 0;
    for (const Tensor* t : in) {
      for (std::size_t r = 0; r < t->rows(); ++r) {
        for (std::size_t c = 0; c < t->cols(); ++c) {
          if (axis_ == 0) {
            out.at(offset + r, c) = t->at(r, c);
          } else {
            out.at(r, offset + c) = t->at(r, c);
          }
        }
      }
      offset += axis_ == 0 ? t->rows() : t->cols();
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    std::vector<Tensor> out;
    std::size_t offset = 0;
    for (const Tensor* t : in) {
      Tensor d(t->shape());
      for (std::size_t r = 0; r < t->rows(); ++r) {
        for (std::size_t c = 0; c < t->cols(); ++c) {
          d.at(r, c) = axis_ == 0 ? g.at(offset + r, c) : g.at(r, offset + c);
        }
      }
      offset += axis_ == 0 ? t->rows() : t->cols();
      out.push_back(std::move(d));
    }
    return out;
  }

 private:
  int axis_;
};

class GatherRowsOp final : public Operation {
 public:
  explicit GatherRowsOp(std::vector<std::size_t> rows) : rows_(std::move(rows)) {}
  std::string_view name() const override { return "gather_rows"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& s = in[0];
    if (s.size() != 2) shape_error(name(), "operand must be rank 2");
    if (rows_.empty()) shape_error(name(), "empty row selection");
    for (std::size_t r : rows_) {
      if (r >= s[0]) shape_error(name(), "row " + std::to_string(r) + " of " + shape_string(s));
    }
    return {rows_.size(), s[1]};
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    const Tensor& a = *in[0];
    const std::size_t c = a.cols();
    Tensor out({rows_.size(), c});
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(rows_[i] * c), c,
                  out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    Tensor d(in[0]->shape());
    const std::size_t c = d.cols();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (std::size_t k = 0; k < c; ++k) d.at(rows_[i], k) += g.at(i, k);
    }
    return {std::move(d)};
  }

 private:
  std::vector<std::size_t> rows_;
};

class InverseOp final : public Operation {
 public:
  std::string_view name() const override { return "inverse"; }

  Shape output_shape(std::span<const Shape> in) const override {
    const Shape& s = in[0];
    if (s.size() != 2 || s[0] != s[1]) shape_error(name(), "needs a square matrix");
    return s;
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    Eigen::FullPivLU<RowMatrix> lu(in[0]->matrix());
    if (!lu.isInvertible()) {
      fail(ErrorKind::kNonInvertibleMorphism, "inverse of a singular matrix");
    }
    RowMatrix inv = lu.inverse();
    return from_eigen(inv, in[0]->shape());
  }

  std::vector<Tensor> backward(std::span<const Tensor* const>, const Tensor& y,
                               const Tensor& g) override {
    // d(A^-1) = -A^-1 dA A^-1  =>  dL/dA = -A^-T G A^-T
    RowMatrix d = -(y.matrix().transpose() * g.matrix() * y.matrix().transpose());
    return {from_eigen(d, y.shape())};
  }
};

class MmdRbfOp final : public Operation {
 public:
  explicit MmdRbfOp(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      fail(ErrorKind::kInvalidArgument, "mmd bandwidth must be positive");
    }
  }
  std::string_view name() const override { return "mmd_rbf"; }

  Shape output_shape(std::span<const Shape> in) const override {
    if (in[0].size() != 2 || in[1].size() != 2 || in[0][1] != in[1][1]) {
      shape_error(name(), shape_string(in[0]) + " vs " + shape_string(in[1]));
    }
    return {};
  }

  Tensor forward(std::span<const Tensor* const> in) override {
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    const double m = static_cast<double>(a.rows());
    const double n = static_cast<double>(b.rows());
    // The cross sum runs in an orientation fixed by the operands' contents
    // so that swapping them gives a bit-identical value.
    const double cross = canonical_first(a, b) ? block_sum(a, b) : block_sum(b, a);
    const double v = block_sum(a, a) / (m * m) + block_sum(b, b) / (n * n) -
                     2.0 * cross / (m * n);
    return Tensor::scalar(v);
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> in,
                               const Tensor&, const Tensor& g) override {
    const Tensor& a = *in[0];
    const Tensor& b = *in[1];
    const double m = static_cast<double>(a.rows());
    const double n = static_cast<double>(b.rows());
    const double s2 = sigma_ * sigma_;
    const double gv = g.item();
    Tensor da(a.shape());
    Tensor db(b.shape());
    // d k(x,y) / dx = -k(x,y) (x - y) / sigma^2
    auto accumulate = [&](const Tensor& x, const Tensor& y, Tensor& dx, Tensor* dy,
                          double coef) {
      const std::size_t d = x.cols();
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < y.rows(); ++j) {
          const double k = kernel(x, i, y, j);
          const double w = -coef * k / s2;
          for (std::size_t c = 0; c < d; ++c) {
            const double diff = x.at(i, c) - y.at(j, c);
            dx.at(i, c) += w * diff;
            if (dy) dy->at(j, c) -= w * diff;
          }
        }
      }
    };
    accumulate(a, a, da, &da, gv / (m * m));
    accumulate(b, b, db, &db, gv / (n * n));
    accumulate(a, b, da, &db, -2.0 * gv / (m * n));
    return {std::move(da), std::move(db)};
  }

 private:
  double kernel(const Tensor& x, std::size_t i, const Tensor& y,
                std::size_t j) const {
    double d2 = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double diff = x.at(i, c) - y.at(j, c);
      d2 += diff * diff;
    }
    return std::exp(-d2 / (2.0 * sigma_ * sigma_));
  }

  static bool canonical_first(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    return !std::lexicographical_compare(b.data().begin(), b.data().end(),
                                         a.data().begin(), a.data().end());
  }

  double block_sum(const Tensor& x, const Tensor& y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < y.rows(); ++j) s += kernel(x, i, y, j);
    }
    return s;
  }

  double sigma_;
};

Node unary(std::unique_ptr<Operation> op, Node a) {
  return a.graph().apply(std::move(op), {a});
}

Node binary(std::unique_ptr<Operation> op, Node a, Node b) {
  return a.graph().apply(std::move(op), {a, b});
}

}  // namespace

Node matmul(Node a, Node b) { return binary(std::make_unique<MatMulOp>(), a, b); }
Node add(Node a, Node b) { return binary(std::make_unique<AddOp>(1.0), a, b); }
Node sub(Node a, Node b) { return binary(std::make_unique<AddOp>(-1.0), a, b); }
Node scale(Node a, double factor) {
  return unary(std::make_unique<ScaleOp>(factor), a);
}
Node tanh(Node a) { return unary(std::make_unique<ActivationOp>(Activation::kTanh), a); }
Node relu(Node a) { return unary(std::make_unique<ActivationOp>(Activation::kRelu), a); }
Node sigmoid(Node a) {
  return unary(std::make_unique<ActivationOp>(Activation::kSigmoid), a);
}
Node softmax_cross_entropy(Node logits, std::vector<int> labels) {
  return unary(std::make_unique<SoftmaxCrossEntropyOp>(std::move(labels)), logits);
}
Node sum_squares(Node a) { return unary(std::make_unique<SumSquaresOp>(), a); }
Node transpose(Node a) { return unary(std::make_unique<TransposeOp>(), a); }
Node concat(std::vector<Node> parts, int axis) {
  if (parts.empty()) fail(ErrorKind::kShapeMismatch, "concat: no operands");
  Graph& g = parts.front().graph();
  return g.apply(std::make_unique<ConcatOp>(axis), std::move(parts));
}
Node gather_rows(Node a, std::vector<std::size_t> rows) {
  return unary(std::make_unique<GatherRowsOp>(std::move(rows)), a);
}
Node inverse(Node a) { return unary(std::make_unique<InverseOp>(), a); }
Node mmd_rbf(Node a, Node b, double sigma) {
  return binary(std::make_unique<MmdRbfOp>(sigma), a, b);
}

}  // namespace catharm::numcore
