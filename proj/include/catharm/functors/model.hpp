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

#ifndef CATHARM_FUNCTORS_MODEL_HPP_
#define CATHARM_FUNCTORS_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catharm/common/util.hpp"
#include "catharm/numcore/graph.hpp"
#include "catharm/numcore/tensor.hpp"

namespace catharm::functors {

using numcore::Graph;
using numcore::Node;
using numcore::Tensor;

enum class Activation { kLinear, kTanh, kRelu, kSigmoid };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct LatentSpec {
  std::size_t n = 32;
  std::vector<std::size_t> hidden = {32};
  Activation activation = Activation::kTanh;

  void validate() const;
  friend bool operator==(const LatentSpec&, const LatentSpec&) = default;
};

// Fully connected network. dims = {in, hidden..., out}; hidden_activation
// follows every layer but the last, which uses output_activation.
struct MlpSpec {
  std::vector<std::size_t> dims;
  Activation hidden_activation = Activation::kTanh;
  Activation output_activation = Activation::kLinear;

  std::size_t in() const { return dims.front(); }
  std::size_t out() const { return dims.back(); }
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct Mlp {
  MlpSpec spec;
  std::vector<Tensor> weights;  // {dims[i], dims[i+1]}
  std::vector<Tensor> biases;   // {dims[i+1]}

  // Zero weights and biases.
  explicit Mlp(MlpSpec s = {});
  // Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static Mlp kaiming(MlpSpec s, Rng& rng);

  // x is {p} or {m, p}; returns {out} or {m, out}.
  Tensor apply(const Tensor& x) const;
  Tensor logits(const Tensor& x) const;  // without the output activation
  Node build(Graph& g, const std::string& prefix, Node x);
  Node build_logits(Graph& g, const std::string& prefix, Node x);
};

struct Morphism {
  std::string covariate;
  Tensor w;  // {n, n}
  bool orthogonal = true;

  std::size_t dim() const { return w.shape()[0]; }
  // W = I + eps * G, G seeded standard normal.
  static Morphism near_identity(std::string covariate, std::size_t n,
                                bool orthogonal, Rng& rng, double eps = 0.01);
};

// Encoder F, optional decoder F^-1 and classifier C, and one morphism per
// equivariant covariate.
struct ModelBundle {
  Mlp encoder;
  std::optional<Mlp> decoder;
  std::optional<Mlp> classifier;
  std::map<std::string, Morphism> morphisms;

  std::size_t input_dim() const { return encoder.spec.in(); }
  std::size_t latent_dim() const { return encoder.spec.out(); }
  std::size_t num_classes() const;
  void validate() const;

  // Named views of every tensor, in a fixed order:
  // encoder.*, decoder.*, classifier.*, morphism.<covariate>.
  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
};

struct BundleShape {
  std::size_t input_dim = 0;
  std::size_t classes = 0;  // 0 omits the classifier
  bool with_decoder = false;
  Activation decoder_output = Activation::kLinear;
  std::vector<std::size_t> classifier_hidden;
  // covariate -> orthogonal flag
  std::vector<std::pair<std::string, bool>> morphisms;
};

ModelBundle make_bundle(const LatentSpec& latent, const BundleShape& shape,
                        std::uint64_t seed);

// Pure inference helpers. Inputs may be one sample ({p}) or a batch ({m,p}).
Tensor encode(const ModelBundle& b, const Tensor& s);
Tensor decode(const ModelBundle& b, const Tensor& z);
Tensor classify(const ModelBundle& b, const Tensor& z);  // probabilities

// Row-wise softmax of a {k} or {m,k} tensor.
Tensor softmax(const Tensor& logits);

}  // namespace catharm::functors

#endif  // CATHARM_FUNCTORS_MODEL_HPP_
