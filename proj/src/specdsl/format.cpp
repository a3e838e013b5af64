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

#include <sstream>

#include "catharm/common/util.hpp"
#include "catharm/specdsl/plan.hpp"

namespace catharm::specdsl {

namespace {

using pairing::BinRule;
using pairing::Constraint;
using pairing::MorphismKind;

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

std::string mlp(const std::vector<std::size_t>& widths) {
  std::string s = "mlp(";
  for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? ", " : "") + std::to_string(widths[i]);
  return s + ")";
}

std::string boolean(bool b) { return b ? "true" : "false"; }

std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kTabular: return "tabular";
    case DatasetKind::kMnist: return "mnist";
    case DatasetKind::kSynthetic: return "synthetic";
  }
  return "tabular";
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kNone: return "none";
    case Experiment::kSuccessor: return "successor";
    case Experiment::kTransforms: return "transforms";
  }
  return "none";
}

std::string bins(const pairing::Binning& b) {
  switch (b.rule) {
    case BinRule::kIdentity: return "identity";
    case BinRule::kLevels: return "levels";
    case BinRule::kWidth: return "width(" + format_double(b.width) + ", " + format_double(b.anchor) + ")";
    case BinRule::kEdges: {
      std::string s = "edges(";
      for (std::size_t i = 0; i < b.edges.size(); ++i) s += (i ? ", " : "") + format_double(b.edges[i]);
      return s + ")";
    }
  }
  return "identity";
}

std::string morphism(const pairing::CovariateSpec& s) {
  if (s.morphism == MorphismKind::kNone) return "none";
  return to_string(s.morphism) + "(" + std::to_string(s.morphism_dim) + ")";
}

// Writes one block; entries are sorted by key.
class BlockWriter {
 public:
  BlockWriter(std::ostringstream& out, const char* name) : out_(out), name_(name) {}
  BlockWriter& operator()(const std::string& key, std::string value) {
    entries_.emplace(key, std::move(value));
    return *this;
  }
  ~BlockWriter() {
    out_ << name_ << " {\n";
    for (const auto& [k, v] : entries_) out_ << "  " << k << " = " << v << ";\n";
    out_ << "}\n";
  }

 private:
  std::ostringstream& out_;
  const char* name_;
  std::map<std::string, std::string> entries_;
};

}  // namespace

std::string format_plan(const ExperimentPlan& p) {
  std::ostringstream out;
  const DatasetDirective& d = p.dataset;
  auto n = [](auto v) { return std::to_string(v); };
  BlockWriter(out, "dataset")("kind", kind_name(d.kind))("csv", quote(d.csv))("schema", quote(d.schema))(
      "subsample", n(d.subsample))("images", quote(d.images))("labels", quote(d.labels))(
      "experiment", experiment_name(d.experiment))("train_per_class", n(d.train_per_class))(
      "eval_seeds", n(d.eval_seeds))("base_images", n(d.base_images))("rotate_steps", n(d.rotate_steps))(
      "scale_steps", n(d.scale_steps))("samples", n(d.samples))("features", n(d.features))(
      "effect", format_double(d.effect))("data_seed", n(d.data_seed));
  BlockWriter(out, "latent")("dim", n(p.latent.n))("encoder", mlp(p.latent.hidden))(
      "activation", functors::to_string(p.latent.activation))("decoder", functors::to_string(p.decoder_output))(
      "classifier", mlp(p.classifier_hidden));
  for (const auto& s : p.covariates) {
    BlockWriter(out, "covariate")("name", quote(s.name))("column", quote(s.column))(
        "kind", pairing::to_string(s.kind))("bins", bins(s.bins))("constraint", pairing::to_string(s.constraint))(
        "morphism", morphism(s))("penalty", pairing::to_string(s.penalty))("policy", pairing::to_string(s.policy))(
        "include_d0", boolean(s.include_d0))("match_label", boolean(s.match_label))(
        "lambda", format_double(p.train.weights.covariate(s.name)));
  }
  const trainer::TrainConfig& t = p.train;
  BlockWriter(out, "loss")("reconstruction", format_double(t.weights.lambda_r))(
      "prediction", format_double(t.weights.lambda_p))("structure", format_double(t.weights.lambda_s))(
      "orthogonality", format_double(t.weights.mu_orth))("mmd_sigma", format_double(t.mmd_sigma));
  BlockWriter(out, "train")("epochs", n(t.epochs))("batch", n(t.batch_size))(
      "optimizer", t.optimizer.kind == trainer::OptimizerKind::kAdam ? "adam" : "sgd")(
      "lr", format_double(t.optimizer.learning_rate))("beta1", format_double(t.optimizer.beta1))(
      "beta2", format_double(t.optimizer.beta2))("eps", format_double(t.optimizer.eps))("seed", n(t.seed))(
      "folds", n(t.folds))("max_pairs", n(t.max_pairs))("max_power", n(t.max_power))(
      "retract", boolean(t.retract));
  const MetricsSelection& m = p.metrics;
  std::string select = "list(";
  for (std::size_t i = 0; i < m.select.size(); ++i) select += (i ? ", " : "") + m.select[i];
  select += ")";
  BlockWriter(out, "metrics")("nuisance", quote(m.nuisance))("mmd_sigma", format_double(m.mmd_sigma))(
      "adv_repeats", n(m.adv_repeats))("adv_train_fraction", format_double(m.adv_train_fraction))(
      "adv_iterations", n(m.adv_iterations))("adv_l2", format_double(m.adv_l2))(
      "all_rows", boolean(m.all_rows))("select", select);
  return out.str();
}

std::string config_hash(const ExperimentPlan& plan) {
  ExperimentPlan p = plan;
  p.train.seed = 0;
  return hex64(fnv1a(format_plan(p)));
}

std::string to_string(TermKind k) {
  switch (k) {
    case TermKind::kReconstruction: return "reconstruction";
    case TermKind::kPrediction: return "prediction";
    case TermKind::kStructure: return "structure";
    case TermKind::kInvariance: return "invariance";
    case TermKind::kMmd: return "mmd";
    case TermKind::kOrthogonality: return "orthogonality";
  }
  return "?";
}

std::vector<LossTerm> compile(const ExperimentPlan& plan) {
  const objective::LossWeights& w = plan.train.weights;
  std::vector<LossTerm> terms;
  if (w.lambda_r > 0) terms.push_back({TermKind::kReconstruction, "", w.lambda_r, pairing::PairPolicy::kAll});
  if (w.lambda_p > 0) terms.push_back({TermKind::kPrediction, "", w.lambda_p, pairing::PairPolicy::kAll});
  for (const auto& s : plan.covariates) {
    TermKind k = TermKind::kStructure;
    if (s.constraint == Constraint::kInvariance) {
      k = s.penalty == pairing::Penalty::kMmd ? TermKind::kMmd : TermKind::kInvariance;
    }
    terms.push_back({k, s.name, w.lambda_s * w.covariate(s.name), s.policy});
  }
  for (const auto& s : plan.covariates) {
    if (s.morphism == MorphismKind::kOrthogonal) {
      terms.push_back({TermKind::kOrthogonality, s.name, w.mu_orth, pairing::PairPolicy::kAll});
    }
  }
  return terms;
}

functors::BundleShape bundle_shape(const ExperimentPlan& plan, std::size_t input_dim, std::size_t classes) {
  functors::BundleShape shape;
  shape.input_dim = input_dim;
  shape.classes = plan.train.weights.lambda_p > 0 ? classes : 0;
  shape.with_decoder = plan.train.weights.lambda_r > 0;
  shape.decoder_output = plan.decoder_output;
  shape.classifier_hidden = plan.classifier_hidden;
  for (const auto& s : plan.covariates) {
    if (s.morphism != MorphismKind::kNone) {
      shape.morphisms.emplace_back(s.name, s.morphism == MorphismKind::kOrthogonal);
    }
  }
  return shape;
}

}  // namespace catharm::specdsl
