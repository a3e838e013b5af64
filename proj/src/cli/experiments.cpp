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

#include "catharm/cli/experiments.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/dataio/images.hpp"
#include "catharm/dataio/loaders.hpp"
#include "catharm/dataio/synthetic.hpp"
#include "catharm/latentnav/traverse.hpp"

namespace catharm::cli {

using specdsl::DatasetKind;
using specdsl::Experiment;

namespace {

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kNone: return "cv";
    case Experiment::kSuccessor: return "successor";
    case Experiment::kTransforms: return "transforms";
  }
  return "cv";
}

class LossLog {
 public:
  explicit LossLog(const std::vector<pairing::CovariateSpec>& specs) {
    for (const auto& s : specs) names_.push_back(s.name);
    out_ << "run,epoch,total,reconstruction,prediction,orthogonality";
    for (const auto& n : names_) out_ << ",structure:" << n;
    for (const auto& n : names_) out_ << ",pairs:" << n;
    out_ << '\n';
  }
  void add(const std::string& run, const trainer::TrainResult& r) {
    for (const trainer::EpochLog& e : r.log) {
      out_ << run << ',' << e.epoch << ',' << format_double(e.mean.total) << ','
           << format_double(e.mean.reconstruction) << ',' << format_double(e.mean.prediction) << ','
           << format_double(e.mean.orthogonality);
      for (const auto& n : names_) {
        auto it = e.mean.structure.find(n);
        out_ << ',' << format_double(it == e.mean.structure.end() ? 0.0 : it->second);
      }
      for (const auto& n : names_) {
        auto it = e.pairs.find(n);
        out_ << ',' << (it == e.pairs.end() ? 0 : it->second);
      }
      out_ << '\n';
    }
  }
  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> names_;
  std::ostringstream out_;
};

const pairing::CovariateSpec& plan_covariate(const ExperimentPlan& plan, const std::string& name) {
  for (const auto& s : plan.covariates) {
    if (s.name == name) return s;
  }
  fail(ErrorKind::kUnknownCovariate, "the plan declares no covariate '" + name + "'");
}

const std::string& equivariant_covariate(const ExperimentPlan& plan) {
  for (const auto& s : plan.covariates) {
    if (s.morphism != pairing::MorphismKind::kNone) return s.name;
  }
  fail(ErrorKind::kUnknownCovariate, "image experiments need a covariate with a morphism");
}

double mean_mse(const numcore::Tensor& a, const std::vector<std::vector<double>>& truth) {
  const std::size_t p = a.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      const double e = a.data()[r * p + c] - truth[r][c];
      s += e * e;
    }
    total += s / static_cast<double>(p);
  }
  return total / static_cast<double>(truth.size());
}

void check_model(const ModelBundle& b, const ExperimentPlan& plan, const Dataset& data) {
  if (b.latent_dim() != plan.latent.n) {
    fail(ErrorKind::kDimensionMismatch, "checkpoint latent dim " + std::to_string(b.latent_dim()) +
                                            " differs from the spec file's " + std::to_string(plan.latent.n));
  }
  if (b.input_dim() != data.dim()) {
    fail(ErrorKind::kDimensionMismatch, "checkpoint input dim " + std::to_string(b.input_dim()) +
                                            " differs from the dataset's " + std::to_string(data.dim()));
  }
}

}  // namespace

fs::path resolve(const fs::path& base_dir, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

Dataset load_dataset(const ExperimentPlan& plan, const fs::path& base_dir) {
  const specdsl::DatasetDirective& d = plan.dataset;
  Dataset data;
  switch (d.kind) {
    case DatasetKind::kTabular:
      data = dataio::load_tabular_csv(resolve(base_dir, d.csv), resolve(base_dir, d.schema));
      if (d.subsample > 0 && d.subsample < data.size()) {
        data = data.subset(dataio::subsample_rows(data.size(), d.subsample, d.data_seed));
      }
      break;
    case DatasetKind::kMnist:
      data = dataio::load_mnist_idx(resolve(base_dir, d.images), resolve(base_dir, d.labels));
      break;
    case DatasetKind::kSynthetic:
      data = dataio::synth_monotone(d.samples, d.features, d.effect, d.data_seed);
      break;
  }
  // Transform covariates only exist on the generated series.
  if (d.experiment != Experiment::kTransforms) dataio::bind_covariates(data, plan.covariates);
  return data;
}

ModelBundle make_model(const ExperimentPlan& plan, std::size_t input_dim, std::size_t classes,
                       std::uint64_t seed) {
  return functors::make_bundle(plan.latent, specdsl::bundle_shape(plan, input_dim, classes), seed);
}

trainer::EvalOptions eval_options(const ExperimentPlan& plan) {
  trainer::EvalOptions o;
  o.nuisance = plan.metrics.nuisance;
  o.mmd_sigma = plan.metrics.mmd_sigma;
  o.adv.repeats = plan.metrics.adv_repeats;
  o.adv.train_fraction = plan.metrics.adv_train_fraction;
  o.adv.iterations = plan.metrics.adv_iterations;
  o.adv.l2 = plan.metrics.adv_l2;
  o.invariance_all_rows = plan.metrics.all_rows;
  return o;
}

json standardizer_json(const dataio::Standardizer& s) {
  return {{"columns", s.columns}, {"mean", s.mean}, {"scale", s.scale}};
}

dataio::Standardizer standardizer_from_json(const json& j) {
  dataio::Standardizer s;
  s.columns = j.at("columns").get<std::vector<std::size_t>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  return s;
}

Dataset scaled_for(const trainer::Checkpoint& ck, const Dataset& data) {
  Dataset out = data;
  if (ck.extra.contains("standardizer")) {
    const auto st = standardizer_from_json(ck.extra.at("standardizer"));
    for (std::size_t c : st.columns) {
      if (c >= data.dim()) fail(ErrorKind::kDimensionMismatch, "standardizer column out of range");
    }
    st.apply(out.features);
  }
  return out;
}

// ---------------------------------------------------------------- successor

SuccessorSplit successor_split(const Dataset& all, const specdsl::DatasetDirective& d) {
  if (!all.is_image()) fail(ErrorKind::kNonImageDataset, "the successor experiment needs images");
  Rng rng(derive_seed(d.data_seed, "split"));
  std::vector<std::vector<std::size_t>> by_class(all.num_classes());
  for (std::size_t i = 0; i < all.size(); ++i) by_class[static_cast<std::size_t>(all.labels[i])].push_back(i);
  std::vector<std::size_t> holdout;
  SuccessorSplit s;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.size() <= d.train_per_class) {
      fail(ErrorKind::kEmptyClass, "class " + all.class_names[c] + " has " + std::to_string(rows.size()) +
                                       " images, needs more than " + std::to_string(d.train_per_class));
    }
    shuffle_indices(rows, rng);
    s.train.insert(s.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(d.train_per_class));
    holdout.insert(holdout.end(), rows.begin() + static_cast<std::ptrdiff_t>(d.train_per_class), rows.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(holdout.begin(), holdout.end());
  const std::size_t want4 = d.eval_seeds / 2, want5 = d.eval_seeds - want4;
  std::size_t n4 = 0, n5 = 0;
  for (std::size_t r : holdout) {
    if (all.labels[r] == 4 && n4 < want4) {
      s.seeds.push_back(r);
      ++n4;
    } else if (all.labels[r] == 5 && n5 < want5) {
      s.seeds.push_back(r);
      ++n5;
    }
  }
  if (n4 < want4 || n5 < want5) fail(ErrorKind::kEmptyClass, "not enough held-out 4s and 5s for the seeds");
  const std::set<std::size_t> seeds(s.seeds.begin(), s.seeds.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!seeds.count(i)) s.pool.push_back(i);
  }
  return s;
}

json SuccessorScore::to_json() const {
  json per = json::object();
  for (const auto& [d, v] : per_d) per[std::to_string(d)] = v;
  return {{"cases", cases}, {"hits", hits}, {"success", success}, {"per_d", per}};
}

SuccessorScore score_successor(const ModelBundle& b, const Dataset& all, const SuccessorSplit& split,
                               const std::string& covariate, int max_d) {
  const Dataset pool = all.subset(split.pool);
  const Dataset seeds = all.subset(split.seeds);
  SuccessorScore score;
  for (int d = -max_d; d <= max_d; ++d) {
    const numcore::Tensor generated = latentnav::generate_hypothetical(
        b, seeds.features, latentnav::TraversalPlan{{{covariate, static_cast<double>(d)}}});
    std::size_t hits = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto nc = latentnav::nearest_class(generated.row(s), pool.features, pool.labels);
      hits += nc.label == seeds.labels[s] + d;
    }
    score.per_d[d] = 100.0 * static_cast<double>(hits) / static_cast<double>(seeds.size());
    score.hits += hits;
    score.cases += seeds.size();
  }
  score.success = 100.0 * static_cast<double>(score.hits) / static_cast<double>(score.cases);
  return score;
}

// ---------------------------------------------------------------- transforms

TransformSplit transform_split(const Dataset& all, const specdsl::DatasetDirective& d) {
  if (!all.is_image()) fail(ErrorKind::kNonImageDataset, "the transform experiment needs images");
  if (d.base_images + d.eval_seeds > all.size()) {
    fail(ErrorKind::kInvalidArgument, "base_images + eval_seeds exceeds the image count");
  }
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(d.data_seed, "transforms"));
  shuffle_indices(order, rng);
  TransformSplit s;
  s.base.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d.base_images));
  s.eval.assign(order.begin() + static_cast<std::ptrdiff_t>(d.base_images),
                order.begin() + static_cast<std::ptrdiff_t>(d.base_images + d.eval_seeds));
  std::sort(s.base.begin(), s.base.end());
  std::sort(s.eval.begin(), s.eval.end());
  return s;
}

TransformData transform_training_set(const Dataset& all, const TransformSplit& split,
                                     const specdsl::DatasetDirective& d) {
  std::vector<dataio::TransformPairs> series;
  if (d.rotate_steps > 0) series.push_back(dataio::make_transform_pairs(all, dataio::Transform::kRotate, d.rotate_steps, split.base));
  if (d.scale_steps > 0) series.push_back(dataio::make_transform_pairs(all, dataio::Transform::kScale, d.scale_steps, split.base));
  TransformData out;
  Dataset& m = out.data;
  std::vector<double> values;
  std::size_t total = 0;
  for (const auto& s : series) total += s.data.size();
  m.class_names = all.class_names;
  m.feature_names = all.feature_names;
  m.image_rows = all.image_rows;
  m.image_cols = all.image_cols;
  std::uint64_t h = all.content_hash;
  for (const auto& s : series) {
    h = fnv1a(std::to_string(s.data.content_hash), h);
    pairing::CovariateColumn col = s.data.covariates.columns.at(0);
    col.codes.assign(total, 0);
    col.raw.assign(total, 0.0);
    m.covariates.columns.push_back(std::move(col));
  }
  m.content_hash = h;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Dataset& s = series[k].data;
    const auto span = s.features.data();
    values.insert(values.end(), span.begin(), span.end());
    m.labels.insert(m.labels.end(), s.labels.begin(), s.labels.end());
    for (std::size_t r = 0; r < s.size(); ++r) {
      m.covariates.columns[k].codes[offset + r] = s.covariates.columns[0].codes[r];
      m.covariates.columns[k].raw[offset + r] = s.covariates.columns[0].codes[r];
    }
    pairing::PairSet ps = series[k].pairs;
    for (auto& p : ps.entries) {
      p.i += offset;
      p.j += offset;
    }
    out.pairs.push_back(std::move(ps));
    offset += s.size();
  }
  m.features = numcore::Tensor({total, all.dim()}, std::move(values));
  return out;
}

json TransformScore::to_json() const {
  auto series = [](const std::map<int, double>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  json comp = json::array();
  for (const auto& [ij, v] : composite_mse) comp.push_back({{"rotate", ij.first}, {"scale", ij.second}, {"mse", v}});
  return {{"rotate_mse", series(rotate_mse)},
          {"scale_mse", series(scale_mse)},
          {"composite_mse", comp},
          {"generalization_ratio", generalization_ratio},
          {"worst_composition_ratio", worst_composition_ratio}};
}

TransformScore score_transforms(const ModelBundle& b, const Dataset& all, const TransformSplit& split,
                                const specdsl::DatasetDirective& d) {
  using dataio::Transform;
  const Dataset eval = all.subset(split.eval);
  const std::size_t p = all.dim();
  auto image = [&](std::size_t r) {
    auto s = eval.features.data().subspan(r * p, p);
    return std::vector<double>(s.begin(), s.end());
  };
  auto truth = [&](std::vector<std::pair<Transform, int>> steps) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < eval.size(); ++r) {
      std::vector<double> img = image(r);
      for (const auto& [t, k] : steps) img = dataio::transform_image(img, all.image_rows, all.image_cols, t, k);
      out.push_back(std::move(img));
    }
    return out;
  };
  auto generated = [&](std::vector<latentnav::PlanStep> steps) {
    return latentnav::generate_hypothetical(b, eval.features, latentnav::TraversalPlan{std::move(steps)});
  };
  TransformScore s;
  const bool rot = d.rotate_steps > 0, sc = d.scale_steps > 0;
  if (rot) {
    for (int k = 0; k <= 2 * d.rotate_steps; ++k) {
      s.rotate_mse[k] = mean_mse(generated({{"rotate", double(k)}}), truth({{Transform::kRotate, k}}));
    }
    s.generalization_ratio = s.rotate_mse[2 * d.rotate_steps] / s.rotate_mse[d.rotate_steps];
  }
  if (sc) {
    for (int k = 0; k <= d.scale_steps; ++k) {
      s.scale_mse[k] = mean_mse(generated({{"scale", double(k)}}), truth({{Transform::kScale, k}}));
    }
  }
  if (rot && sc) {
    for (int i = 1; i <= d.rotate_steps; ++i) {
      for (int j = 1; j <= d.scale_steps; ++j) {
        // Scaling acts first, then rotation: W_r^i W_s^j F(s).
        const double v = mean_mse(generated({{"scale", double(j)}, {"rotate", double(i)}}),
                                  truth({{Transform::kScale, j}, {Transform::kRotate, i}}));
        s.composite_mse[{i, j}] = v;
        s.worst_composition_ratio =
            std::max(s.worst_composition_ratio, v / std::max(s.rotate_mse[i], s.scale_mse[j]));
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------- runs

TrainOutput run_training(const ExperimentPlan& plan, const fs::path& base_dir, std::size_t threads) {
  const Dataset data = load_dataset(plan, base_dir);
  const trainer::TrainConfig& cfg = plan.train;
  const std::string hash = specdsl::config_hash(plan);
  TrainOutput out;
  trainer::Checkpoint& ck = out.checkpoint;
  ck.specs = plan.covariates;
  ck.config_hash = hash;
  ck.seed = cfg.seed;
  ck.extra["experiment"] = experiment_name(plan.dataset.experiment);
  ck.extra["plan"] = specdsl::format_plan(plan);
  ck.extra["classes"] = data.num_classes();
  LossLog losses(plan.covariates);
  json report;
  std::ostringstream summary;

  switch (plan.dataset.experiment) {
    case Experiment::kNone: {
      auto make = [&](std::uint64_t seed) { return make_model(plan, data.dim(), data.num_classes(), seed); };
      trainer::CvResult cv = trainer::train_cv(data, make, cfg, eval_options(plan), threads);
      cv.report.config_hash = hash;
      for (std::size_t k = 0; k < cv.runs.size(); ++k) {
        losses.add("fold" + std::to_string(k), cv.runs[k].log);
        ck.folds.push_back(std::move(cv.runs[k].bundle));
      }
      // The main model is refit on every row for traversal and hypotheticals.
      std::vector<std::size_t> rows(data.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      const auto st = dataio::Standardizer::fit(data.features, data.numeric_columns, rows);
      Dataset scaled = data;
      st.apply(scaled.features);
      trainer::TrainConfig final_cfg = cfg;
      final_cfg.seed = derive_seed(cfg.seed, "final");
      ck.bundle = make_model(plan, data.dim(), data.num_classes(), final_cfg.seed);
      losses.add("all", trainer::train(scaled, ck.bundle, final_cfg));
      ck.extra["standardizer"] = standardizer_json(st);
      report = cv.report.to_json();
      summary << cv.report.table();
      break;
    }
    case Experiment::kSuccessor: {
      const std::string& cov = equivariant_covariate(plan);
      const SuccessorSplit split = successor_split(data, plan.dataset);
      const Dataset train_set = data.subset(split.train);
      trainer::PairSource source;
      source.per_epoch = [&](int epoch) {
        return std::vector<pairing::PairSet>{dataio::make_successor_pairs(
            train_set, derive_seed(cfg.seed, "successor", static_cast<std::uint64_t>(epoch)), cov)};
      };
      ck.bundle = make_model(plan, data.dim(), data.num_classes(), derive_seed(cfg.seed, "model"));
      losses.add("all", trainer::train(train_set, ck.bundle, cfg, source));
      const SuccessorScore score = score_successor(ck.bundle, data, split, cov);
      report = {{"config_hash", hash}, {"seed", cfg.seed}, {"experiment", "successor"}, {"successor", score.to_json()}};
      summary << "successor nearest-class match " << format_double(score.success) << "% of " << score.cases
              << " cases\n";
      for (const auto& [d, v] : score.per_d) summary << "  d=" << d << "  " << v << "%\n";
      break;
    }
    case Experiment::kTransforms: {
      for (const auto& s : plan.covariates) {
        if (s.name != "rotate" && s.name != "scale") {
          fail(ErrorKind::kUnknownCovariate, "transform experiments take covariates rotate and scale, not '" +
                                                 s.name + "'");
        }
      }
      const TransformSplit split = transform_split(data, plan.dataset);
      TransformData td = transform_training_set(data, split, plan.dataset);
      for (auto& col : td.data.covariates.columns) {
        const auto& spec = plan_covariate(plan, col.spec.name);
        col.spec = spec;
      }
      trainer::PairSource source;
      source.fixed = td.pairs;
      ck.bundle = make_model(plan, data.dim(), data.num_classes(), derive_seed(cfg.seed, "model"));
      losses.add("all", trainer::train(td.data, ck.bundle, cfg, source));
      const TransformScore score = score_transforms(ck.bundle, data, split, plan.dataset);
      report = {{"config_hash", hash}, {"seed", cfg.seed}, {"experiment", "transforms"}, {"transforms", score.to_json()}};
      summary << "rotation generalization ratio " << score.generalization_ratio << "\n"
              << "worst composition ratio " << score.worst_composition_ratio << "\n";
      break;
    }
  }
  out.report = report;
  out.losses_csv = losses.str();
  out.summary = summary.str();
  return out;
}

json run_evaluation(const trainer::Checkpoint& ck, const ExperimentPlan& plan, const fs::path& base_dir,
                    std::size_t threads) {
  const Dataset data = load_dataset(plan, base_dir);
  check_model(ck.bundle, plan, data);
  trainer::TrainConfig cfg = plan.train;
  cfg.seed = ck.seed;
  const std::string experiment = ck.extra.value("experiment", "cv");
  if (experiment != experiment_name(plan.dataset.experiment)) {
    fail(ErrorKind::kInvalidArgument, "checkpoint holds a '" + experiment + "' run, the spec file describes '" +
                                          experiment_name(plan.dataset.experiment) + "'");
  }
  if (experiment == "cv") {
    for (const auto& b : ck.folds) check_model(b, plan, data);
    metrics::MetricsReport r = trainer::evaluate_cv(data, ck.folds, cfg, eval_options(plan), threads);
    r.config_hash = ck.config_hash;
    return r.to_json();
  }
  if (experiment == "successor") {
    const SuccessorScore score =
        score_successor(ck.bundle, data, successor_split(data, plan.dataset), equivariant_covariate(plan));
    return {{"config_hash", ck.config_hash}, {"seed", ck.seed}, {"experiment", "successor"}, {"successor", score.to_json()}};
  }
  const TransformScore score = score_transforms(ck.bundle, data, transform_split(data, plan.dataset), plan.dataset);
  return {{"config_hash", ck.config_hash}, {"seed", ck.seed}, {"experiment", "transforms"}, {"transforms", score.to_json()}};
}

}  // namespace catharm::cli
