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

#include "catharm/functors/morphism.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <unsupported/Eigen/MatrixFunctions>

#include "catharm/common/error.hpp"

namespace catharm::functors {

using numcore::RowMatrix;

namespace {

void check_power(int d, int max_power) {
  if (std::abs(d) > max_power) {
    fail(ErrorKind::kPowerLimitExceeded,
         "power " + std::to_string(d) + " exceeds limit " + std::to_string(max_power));
  }
}

RowMatrix inverse_of(const Morphism& m) {
  if (m.orthogonal) return m.w.matrix().transpose();
  Eigen::JacobiSVD<RowMatrix> svd(m.w.matrix());
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  const double cond = smin > 0.0 ? s(0) / smin : INFINITY;
  if (!(cond <= kMaxConditionNumber)) {
    fail(ErrorKind::kNonInvertibleMorphism,
         "morphism '" + m.covariate + "' has condition number " + std::to_string(cond));
  }
  log_warning("negative power of non-orthogonal morphism '" + m.covariate +
              "' uses an explicit inverse");
  return m.w.matrix().inverse();
}

RowMatrix int_power(const Morphism& m, int d, int max_power) {
  check_power(d, max_power);
  const auto n = static_cast<Eigen::Index>(m.dim());
  RowMatrix result = RowMatrix::Identity(n, n);
  if (d == 0) return result;
  RowMatrix base = d > 0 ? RowMatrix(m.w.matrix()) : inverse_of(m);
  for (int k = 0; k < std::abs(d); ++k) result = result * base;
  return result;
}

}  // namespace

Tensor apply_matrix(const Tensor& matrix, const Tensor& z) {
  const std::size_t n = matrix.shape()[0];
  if (z.rank() < 1 || z.rank() > 2 || z.cols() != n) {
    fail(ErrorKind::kDimensionMismatch,
         "morphism of dimension " + std::to_string(n) + " applied to " +
             numcore::shape_string(z.shape()));
  }
  RowMatrix out = z.matrix() * matrix.matrix().transpose();
  return Tensor(z.shape(), std::vector<double>(out.data(), out.data() + out.size()));
}

Tensor apply_morphism(const Morphism& m, int d, const Tensor& z, int max_power) {
  check_power(d, max_power);
  if (d == 0) {
    if (z.rank() < 1 || z.rank() > 2 || z.cols() != m.dim()) {
      fail(ErrorKind::kDimensionMismatch, "latent dimension differs from morphism");
    }
    return z;
  }
  return apply_matrix(Tensor::from_matrix(int_power(m, d, max_power)), z);
}

Tensor morphism_power(const Morphism& m, int d, int max_power) {
  return Tensor::from_matrix(int_power(m, d, max_power));
}

Tensor morphism_power(const Morphism& m, double a, int max_power) {
  if (!std::isfinite(a)) fail(ErrorKind::kInvalidArgument, "non-finite exponent");
  if (std::abs(a) > max_power) {
    fail(ErrorKind::kPowerLimitExceeded, "exponent exceeds power limit");
  }
  if (a == std::round(a)) return morphism_power(m, static_cast<int>(a), max_power);
  if (!m.orthogonal) {
    fail(ErrorKind::kFractionalPowerOnNonOrthogonal,
         "fractional power of non-orthogonal morphism '" + m.covariate + "'");
  }
  const Eigen::MatrixXd w = m.w.matrix();
  // A real negative eigenvalue has no real principal fractional power.
  Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
  for (const std::complex<double>& lambda : es.eigenvalues()) {
    if (lambda.real() < 0.0 && std::abs(lambda.imag()) <= 1e-9 * std::abs(lambda)) {
      fail(ErrorKind::kFractionalPowerUndefined,
           "morphism '" + m.covariate + "' has a negative real eigenvalue");
    }
  }
  Eigen::MatrixXd p = Eigen::MatrixPower<Eigen::MatrixXd>(w)(a);
  RowMatrix out = p;
  Tensor t = Tensor::from_matrix(out);
  if (!t.all_finite()) {
    fail(ErrorKind::kFractionalPowerUndefined, "fractional power is not finite");
  }
  return t;
}

double orthogonality_residual(const Morphism& m) {
  const auto& w = m.w;
  const std::size_t n = m.dim();
  RowMatrix r = w.matrix().transpose() * w.matrix();
  r -= RowMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return r.squaredNorm();
}

void retract_orthogonal(Morphism& m) {
  Eigen::HouseholderQR<RowMatrix> qr(m.w.matrix());
  RowMatrix q = qr.householderQ();
  const RowMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  m.w = Tensor::from_matrix(q);
}

}  // namespace catharm::functors
