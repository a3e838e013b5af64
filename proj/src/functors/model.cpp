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

#include "catharm/functors/model.hpp"

#include <cmath>

#include "catharm/common/error.hpp"
#include "catharm/numcore/ops.hpp"

namespace catharm::functors {

using numcore::RowMatrix;
using numcore::Shape;

Activation parse_activation(const std::string& name) {
  if (name == "linear" || name == "identity") return Activation::kLinear;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  fail(ErrorKind::kInvalidArgument, "unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "linear";
}

void LatentSpec::validate() const {
  if (n < 1) fail(ErrorKind::kInvalidArgument, "latent dimension must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) fail(ErrorKind::kInvalidArgument, "hidden widths must be >= 1");
  }
}

namespace {

void activate(RowMatrix& m, Activation a) {
  switch (a) {
    case Activation::kLinear: break;
    case Activation::kTanh: m = m.array().tanh(); break;
    case Activation::kRelu: m = m.cwiseMax(0.0); break;
    case Activation::kSigmoid:
      m = m.unaryExpr([](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
      break;
  }
}

Node activate(Node x, Activation a) {
  switch (a) {
    case Activation::kLinear: return x;
    case Activation::kTanh: return numcore::tanh(x);
    case Activation::kRelu: return numcore::relu(x);
    case Activation::kSigmoid: return numcore::sigmoid(x);
  }
  return x;
}

void check_input(const Tensor& x, std::size_t dim, const char* what) {
  if (x.rank() < 1 || x.rank() > 2 || x.cols() != dim) {
    fail(ErrorKind::kDimensionMismatch,
         std::string(what) + " expects dimension " + std::to_string(dim) + ", got " +
             numcore::shape_string(x.shape()));
  }
}

}  // namespace

Mlp::Mlp(MlpSpec s) : spec(std::move(s)) {
  if (spec.dims.size() < 2) {
    spec.dims = {1, 1};
  }
  for (std::size_t i = 0; i + 1 < spec.dims.size(); ++i) {
    weights.emplace_back(Shape{spec.dims[i], spec.dims[i + 1]});
    biases.emplace_back(Shape{spec.dims[i + 1]});
  }
}

Mlp Mlp::kaiming(MlpSpec s, Rng& rng) {
  Mlp mlp(std::move(s));
  for (Tensor& w : mlp.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.shape()[0]));
    for (double& v : w.data()) v = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return mlp;
}

Tensor Mlp::logits(const Tensor& x) const {
  check_input(x, spec.in(), "mlp");
  RowMatrix h = x.matrix();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    RowMatrix next = h * weights[i].matrix();
    next.rowwise() += biases[i].matrix().row(0);
    if (i + 1 < weights.size()) activate(next, spec.hidden_activation);
    h = std::move(next);
  }
  Tensor out = Tensor::from_matrix(h);
  if (x.rank() == 1) return out.reshaped({spec.out()});
  return out;
}

Tensor Mlp::apply(const Tensor& x) const {
  Tensor out = logits(x);
  RowMatrix m = out.matrix();
  activate(m, spec.output_activation);
  return Tensor(out.shape(), std::vector<double>(m.data(), m.data() + m.size()));
}

Node Mlp::build_logits(Graph& g, const std::string& prefix, Node x) {
  Node h = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string id = std::to_string(i);
    h = numcore::add(numcore::matmul(h, g.parameter(prefix + ".w" + id, weights[i])),
                     g.parameter(prefix + ".b" + id, biases[i]));
    if (i + 1 < weights.size()) h = activate(h, spec.hidden_activation);
  }
  return h;
}

Node Mlp::build(Graph& g, const std::string& prefix, Node x) {
  return activate(build_logits(g, prefix, x), spec.output_activation);
}

Morphism Morphism::near_identity(std::string covariate, std::size_t n, bool orthogonal,
                                 Rng& rng, double eps) {
  Morphism m{std::move(covariate), Tensor({n, n}), orthogonal};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      m.w.at(r, c) = (r == c ? 1.0 : 0.0) + eps * standard_normal(rng);
    }
  }
  return m;
}

std::size_t ModelBundle::num_classes() const {
  return classifier ? classifier->spec.out() : 0;
}

void ModelBundle::validate() const {
  const std::size_t n = latent_dim();
  if (decoder && decoder->spec.in() != n) {
    fail(ErrorKind::kDimensionMismatch, "decoder input differs from latent dimension");
  }
  if (classifier && classifier->spec.in() != n) {
    fail(ErrorKind::kDimensionMismatch, "classifier input differs from latent dimension");
  }
  for (const auto& [name, m] : morphisms) {
    if (m.w.rank() != 2 || m.w.shape()[0] != n || m.w.shape()[1] != n) {
      fail(ErrorKind::kDimensionMismatch,
           "morphism '" + name + "' is " + numcore::shape_string(m.w.shape()) +
               ", latent dimension is " + std::to_string(n));
    }
  }
}

namespace {
template <typename B, typename T>
std::vector<std::pair<std::string, T*>> collect(B& b) {
  std::vector<std::pair<std::string, T*>> out;
  auto add_mlp = [&out](auto& mlp, const std::string& prefix) {
    for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
      out.emplace_back(prefix + ".w" + std::to_string(i), &mlp.weights[i]);
      out.emplace_back(prefix + ".b" + std::to_string(i), &mlp.biases[i]);
    }
  };
  add_mlp(b.encoder, "encoder");
  if (b.decoder) add_mlp(*b.decoder, "decoder");
  if (b.classifier) add_mlp(*b.classifier, "classifier");
  for (auto& [name, m] : b.morphisms) out.emplace_back("morphism." + name, &m.w);
  return out;
}
}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelBundle::parameters() {
  return collect<ModelBundle, Tensor>(*this);
}

std::vector<std::pair<std::string, const Tensor*>> ModelBundle::parameters() const {
  return collect<const ModelBundle, const Tensor>(*this);
}

ModelBundle make_bundle(const LatentSpec& latent, const BundleShape& shape,
                        std::uint64_t seed) {
  latent.validate();
  if (shape.input_dim < 1) fail(ErrorKind::kInvalidArgument, "input dimension must be >= 1");
  Rng rng(derive_seed(seed, "init"));
  MlpSpec enc;
  enc.dims.push_back(shape.input_dim);
  enc.dims.insert(enc.dims.end(), latent.hidden.begin(), latent.hidden.end());
  enc.dims.push_back(latent.n);
  enc.hidden_activation = latent.activation;
  ModelBundle b{Mlp::kaiming(enc, rng), std::nullopt, std::nullopt, {}};
  if (shape.with_decoder) {
    MlpSpec dec;
    dec.dims.push_back(latent.n);
    dec.dims.insert(dec.dims.end(), latent.hidden.rbegin(), latent.hidden.rend());
    dec.dims.push_back(shape.input_dim);
    dec.hidden_activation = latent.activation;
    dec.output_activation = shape.decoder_output;
    b.decoder = Mlp::kaiming(dec, rng);
  }
  if (shape.classes > 0) {
    MlpSpec cls;
    cls.dims.push_back(latent.n);
    cls.dims.insert(cls.dims.end(), shape.classifier_hidden.begin(),
                    shape.classifier_hidden.end());
    cls.dims.push_back(shape.classes);
    cls.hidden_activation = latent.activation;
    b.classifier = Mlp::kaiming(cls, rng);
  }
  for (const auto& [name, orthogonal] : shape.morphisms) {
    b.morphisms.emplace(name, Morphism::near_identity(name, latent.n, orthogonal, rng));
  }
  return b;
}

Tensor encode(const ModelBundle& b, const Tensor& s) {
  check_input(s, b.input_dim(), "encode");
  return b.encoder.apply(s);
}

Tensor decode(const ModelBundle& b, const Tensor& z) {
  if (!b.decoder) fail(ErrorKind::kInvalidArgument, "bundle has no decoder");
  check_input(z, b.latent_dim(), "decode");
  return b.decoder->apply(z);
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  const std::size_t k = p.cols();
  auto d = p.data();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double* row = d.data() + r * k;
    double mx = row[0];
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < k; ++c) row[c] /= sum;
  }
  return p;
}

Tensor classify(const ModelBundle& b, const Tensor& z) {
  if (!b.classifier) fail(ErrorKind::kInvalidArgument, "bundle has no classifier");
  check_input(z, b.latent_dim(), "classify");
  return softmax(b.classifier->logits(z));
}

}  // namespace catharm::functors
