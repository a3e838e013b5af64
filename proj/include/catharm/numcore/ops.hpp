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

#ifndef CATHARM_NUMCORE_OPS_HPP_
#define CATHARM_NUMCORE_OPS_HPP_

#include <cstddef>
#include <vector>

#include "catharm/numcore/graph.hpp"

namespace catharm::numcore {

// Matrix product. Rank-1 operands act as a row (left) or column (right)
// vector and the matching output dimension is dropped.
Node matmul(Node a, Node b);

// Elementwise a + b / a - b. `b` may also be a row vector ({n} or {1,n})
// broadcast over the rows of a rank-2 `a`.
Node add(Node a, Node b);
Node sub(Node a, Node b);
Node scale(Node a, double factor);

Node tanh(Node a);
Node relu(Node a);
Node sigmoid(Node a);

// Mean over rows of -log softmax(logits)[label]; logits are {m,k}.
Node softmax_cross_entropy(Node logits, std::vector<int> labels);

// Sum of squared entries (squared Frobenius / l2 norm), a scalar.
Node sum_squares(Node a);

Node transpose(Node a);
// Rank-2 concatenation along axis 0 (rows) or 1 (columns).
Node concat(std::vector<Node> parts, int axis);
// Rows of a rank-2 tensor, in the given order (repeats allowed).
Node gather_rows(Node a, std::vector<std::size_t> rows);
Node inverse(Node a);

// Biased (V-statistic) squared MMD between the rows of `a` and `b` with
// k(x,y) = exp(-|x-y|^2 / (2 sigma^2)). sigma is a constant of the node.
Node mmd_rbf(Node a, Node b, double sigma);

}  // namespace catharm::numcore

#endif  // CATHARM_NUMCORE_OPS_HPP_
