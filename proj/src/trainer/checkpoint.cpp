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

#include "catharm/trainer/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <map>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::trainer {

using functors::Activation;
using functors::Mlp;
using functors::MlpSpec;
using functors::ModelBundle;
using nlohmann::json;
using numcore::Tensor;
using pairing::CovariateSpec;

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'T', 'H', 'M'};

void put_u(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : b_(bytes) {}

  std::uint64_t u(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    std::string_view s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) {
      fail(ErrorKind::kTruncated, "checkpoint ends at byte " + std::to_string(b_.size()) +
                                      ", needed " + std::to_string(pos_ + n));
    }
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

template <typename E, std::size_t N>
E enum_from(const std::string& s, const std::array<E, N>& values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorKind::kInvalidArgument, std::string("unknown ") + what + " '" + s + "'");
}

json mlp_json(const MlpSpec& s) {
  return {{"dims", s.dims},
          {"hidden_activation", functors::to_string(s.hidden_activation)},
          {"output_activation", functors::to_string(s.output_activation)}};
}

MlpSpec mlp_from(const json& j) {
  MlpSpec s;
  s.dims = j.at("dims").get<std::vector<std::size_t>>();
  s.hidden_activation = functors::parse_activation(j.at("hidden_activation").get<std::string>());
  s.output_activation = functors::parse_activation(j.at("output_activation").get<std::string>());
  if (s.dims.size() < 2) fail(ErrorKind::kInvalidArgument, "network needs at least two widths");
  return s;
}

// Fold bundles are stored under "fold<k>/"; the main bundle has no prefix.
std::string tensor_prefix(std::size_t k) {
  return k == 0 ? std::string() : "fold" + std::to_string(k - 1) + "/";
}

json bundle_json(const ModelBundle& b) {
  json j;
  j["encoder"] = mlp_json(b.encoder.spec);
  j["decoder"] = b.decoder ? mlp_json(b.decoder->spec) : json(nullptr);
  j["classifier"] = b.classifier ? mlp_json(b.classifier->spec) : json(nullptr);
  j["morphisms"] = json::array();
  for (const auto& [cov, m] : b.morphisms) {
    j["morphisms"].push_back({{"covariate", cov}, {"orthogonal", m.orthogonal}});
  }
  return j;
}

// Architecture only; tensors are zero until filled from the entries.
ModelBundle bundle_from_json(const json& j) {
  ModelBundle b;
  b.encoder = Mlp(mlp_from(j.at("encoder")));
  if (!j.at("decoder").is_null()) b.decoder = Mlp(mlp_from(j.at("decoder")));
  if (!j.at("classifier").is_null()) b.classifier = Mlp(mlp_from(j.at("classifier")));
  for (const json& m : j.at("morphisms")) {
    const std::string cov = m.at("covariate").get<std::string>();
    const std::size_t n = b.latent_dim();
    b.morphisms[cov] = functors::Morphism{cov, Tensor({n, n}), m.at("orthogonal").get<bool>()};
  }
  return b;
}

}  // namespace

json spec_to_json(const CovariateSpec& s) {
  const char* rule = "identity";
  switch (s.bins.rule) {
    case pairing::BinRule::kIdentity: rule = "identity"; break;
    case pairing::BinRule::kWidth: rule = "width"; break;
    case pairing::BinRule::kEdges: rule = "edges"; break;
    case pairing::BinRule::kLevels: rule = "levels"; break;
  }
  return {{"name", s.name},
          {"kind", to_string(s.kind)},
          {"column", s.column},
          {"bins", {{"rule", rule}, {"width", s.bins.width}, {"anchor", s.bins.anchor},
                    {"edges", s.bins.edges}}},
          {"constraint", to_string(s.constraint)},
          {"morphism", to_string(s.morphism)},
          {"morphism_dim", s.morphism_dim},
          {"penalty", to_string(s.penalty)},
          {"policy", to_string(s.policy)},
          {"include_d0", s.include_d0},
          {"match_label", s.match_label}};
}

CovariateSpec spec_from_json(const json& j) {
  using namespace pairing;
  CovariateSpec s;
  s.name = j.at("name").get<std::string>();
  s.kind = enum_from(j.at("kind").get<std::string>(),
                     std::array{CovariateKind::kCategorical, CovariateKind::kOrdinal}, "kind");
  s.column = j.at("column").get<std::string>();
  const json& b = j.at("bins");
  const std::string rule = b.at("rule").get<std::string>();
  static const std::map<std::string, BinRule> rules = {{"identity", BinRule::kIdentity},
                                                       {"width", BinRule::kWidth},
                                                       {"edges", BinRule::kEdges},
                                                       {"levels", BinRule::kLevels}};
  auto it = rules.find(rule);
  if (it == rules.end()) fail(ErrorKind::kInvalidArgument, "unknown bin rule '" + rule + "'");
  s.bins.rule = it->second;
  s.bins.width = b.at("width").get<double>();
  s.bins.anchor = b.at("anchor").get<double>();
  s.bins.edges = b.at("edges").get<std::vector<double>>();
  s.constraint = enum_from(j.at("constraint").get<std::string>(),
                           std::array{Constraint::kInvariance, Constraint::kEquivariance},
                           "constraint");
  s.morphism = enum_from(j.at("morphism").get<std::string>(),
                         std::array{MorphismKind::kNone, MorphismKind::kLinear,
                                    MorphismKind::kOrthogonal},
                         "morphism");
  s.morphism_dim = j.at("morphism_dim").get<std::size_t>();
  s.penalty = enum_from(j.at("penalty").get<std::string>(),
                        std::array{Penalty::kPairs, Penalty::kMmd}, "penalty");
  s.policy = enum_from(j.at("policy").get<std::string>(),
                       std::array{PairPolicy::kAll, PairPolicy::kMatched}, "policy");
  s.include_d0 = j.at("include_d0").get<bool>();
  s.match_label = j.at("match_label").get<bool>();
  return s;
}

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out(kMagic.begin(), kMagic.end());
  put_u(out, kCheckpointVersion, 4);
  std::vector<std::pair<std::string, const Tensor*>> params;
  for (std::size_t k = 0; k <= c.folds.size(); ++k) {
    const ModelBundle& b = k == 0 ? c.bundle : c.folds[k - 1];
    for (const auto& [name, t] : b.parameters()) params.emplace_back(tensor_prefix(k) + name, t);
  }
  put_u(out, params.size(), 4);
  for (const auto& [name, t] : params) {
    if (name.size() > 0xFFFF) fail(ErrorKind::kInvalidArgument, "tensor name too long");
    put_u(out, name.size(), 2);
    out += name;
    put_u(out, t->shape().size(), 1);
    for (std::size_t d : t->shape()) put_u(out, d, 4);
    for (double v : t->data()) put_u(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  json meta;
  meta["bundle"] = bundle_json(c.bundle);
  meta["folds"] = json::array();
  for (const ModelBundle& b : c.folds) meta["folds"].push_back(bundle_json(b));
  meta["specs"] = json::array();
  for (const CovariateSpec& s : c.specs) meta["specs"].push_back(spec_to_json(s));
  meta["config_hash"] = c.config_hash;
  meta["seed"] = c.seed;
  meta["extra"] = c.extra;
  const std::string text = meta.dump();
  put_u(out, text.size(), 4);
  out += text;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    fail(ErrorKind::kBadMagic, "not a checkpoint (bad magic)");
  }
  Reader r(bytes.substr(kMagic.size()));
  const std::uint64_t version = r.u(4);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                          ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint64_t count = r.u(4);
  std::map<std::string, Tensor> tensors;
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string name(r.take(r.u(2)));
    const std::uint64_t ndim = r.u(1);
    numcore::Shape shape;
    std::size_t n = 1;
    for (std::uint64_t k = 0; k < ndim; ++k) {
      shape.push_back(r.u(4));
      n *= shape.back();
    }
    std::vector<double> values(n);
    for (double& v : values) v = std::bit_cast<double>(r.u(8));
    if (!tensors.emplace(name, Tensor(shape, std::move(values))).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate tensor '" + name + "' in checkpoint");
    }
  }
  const std::string_view text = r.take(r.u(4));
  if (!r.done()) fail(ErrorKind::kInvalidArgument, "trailing bytes after checkpoint metadata");
  json meta;
  try {
    meta = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("checkpoint metadata: ") + e.what());
  }

  Checkpoint c;
  try {
    c.bundle = bundle_from_json(meta.at("bundle"));
    for (const json& b : meta.value("folds", json::array())) c.folds.push_back(bundle_from_json(b));
    for (const json& s : meta.at("specs")) c.specs.push_back(spec_from_json(s));
    c.config_hash = meta.at("config_hash").get<std::string>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.extra = meta.value("extra", json::object());
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("checkpoint metadata: ") + e.what());
  }
  std::size_t used = 0;
  for (std::size_t k = 0; k <= c.folds.size(); ++k) {
    ModelBundle& b = k == 0 ? c.bundle : c.folds[k - 1];
    for (auto& [short_name, t] : b.parameters()) {
      const std::string name = tensor_prefix(k) + short_name;
      auto it = tensors.find(name);
      if (it == tensors.end()) fail(ErrorKind::kInvalidArgument, "checkpoint lacks tensor '" + name + "'");
      if (it->second.shape() != t->shape()) {
        fail(ErrorKind::kShapeMismatch, "tensor '" + name + "' has shape " +
                                            numcore::shape_string(it->second.shape()) +
                                            ", architecture needs " + numcore::shape_string(t->shape()));
      }
      *t = std::move(it->second);
      ++used;
    }
    b.validate();
  }
  if (used != tensors.size()) fail(ErrorKind::kInvalidArgument, "checkpoint has unused tensors");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

bool bundles_bit_equal(const ModelBundle& a, const ModelBundle& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || !numcore::bit_equal(*pa[i].second, *pb[i].second)) {
      return false;
    }
  }
  if (a.encoder.spec != b.encoder.spec) return false;
  if (a.decoder.has_value() != b.decoder.has_value()) return false;
  if (a.decoder && a.decoder->spec != b.decoder->spec) return false;
  if (a.classifier.has_value() != b.classifier.has_value()) return false;
  if (a.classifier && a.classifier->spec != b.classifier->spec) return false;
  for (const auto& [cov, m] : a.morphisms) {
    auto it = b.morphisms.find(cov);
    if (it == b.morphisms.end() || it->second.orthogonal != m.orthogonal) return false;
  }
  return true;
}

}  // namespace catharm::trainer
