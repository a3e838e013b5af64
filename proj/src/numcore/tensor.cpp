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

#include "catharm/numcore/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "catharm/common/error.hpp"

namespace catharm::numcore {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream ss;
  ss << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) ss << ',';
    ss << shape[i];
  }
  ss << ')';
  return ss.str();
}

namespace {
void check_dims(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) {
      fail(ErrorKind::kShapeMismatch,
           "tensor dimensions must be positive, got " + shape_string(shape));
    }
  }
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (shape_size(shape_) != data_.size()) {
    fail(ErrorKind::kShapeMismatch,
         "shape " + shape_string(shape_) + " needs " +
             std::to_string(shape_size(shape_)) + " values, got " +
             std::to_string(data_.size()));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) {
      fail(ErrorKind::kShapeMismatch, "ragged matrix literal");
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(Shape{rows.size(), cols}, std::move(data));
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor(
      Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
      std::move(data));
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() <= 1) return 1;
  fail(ErrorKind::kShapeMismatch, "matrix view needs rank <= 2");
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  if (shape_.empty()) return 1;
  fail(ErrorKind::kShapeMismatch, "matrix view needs rank <= 2");
}

double Tensor::item() const {
  if (data_.size() != 1) {
    fail(ErrorKind::kOutputNotScalar,
         "item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

Tensor Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  if (r >= rows()) fail(ErrorKind::kInvalidArgument, "row index out of range");
  return Tensor(Shape{c}, std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(r * c),
                                              data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kShapeMismatch, "max_abs_diff on different sizes");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace catharm::numcore
