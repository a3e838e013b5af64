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

#ifndef CATHARM_FUNCTORS_MORPHISM_HPP_
#define CATHARM_FUNCTORS_MORPHISM_HPP_

#include "catharm/functors/model.hpp"

namespace catharm::functors {

inline constexpr int kDefaultMaxPower = 64;
inline constexpr double kMaxConditionNumber = 1e8;

// W^d z. z is {n} or {m,n} (each row is a latent vector). Negative powers of
// orthogonal morphisms use W^T; otherwise an explicit inverse guarded by the
// condition number.
Tensor apply_morphism(const Morphism& m, int d, const Tensor& z,
                      int max_power = kDefaultMaxPower);

// Integer power as an n x n matrix (W^0 = I exactly).
Tensor morphism_power(const Morphism& m, int d, int max_power = kDefaultMaxPower);
// Real power. Integers defer to the integer overload; fractional exponents
// need an orthogonal morphism and use the principal branch.
Tensor morphism_power(const Morphism& m, double a, int max_power = kDefaultMaxPower);

// Row-wise product with a precomputed n x n matrix: returns z M^T.
Tensor apply_matrix(const Tensor& matrix, const Tensor& z);

// ||W^T W - I||_F^2
double orthogonality_residual(const Morphism& m);

// Replaces W by the orthogonal factor of its QR decomposition (signs fixed
// so that R has a positive diagonal).
void retract_orthogonal(Morphism& m);

}  // namespace catharm::functors

#endif  // CATHARM_FUNCTORS_MORPHISM_HPP_
