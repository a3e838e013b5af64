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

#include "catharm/trainer/cv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::trainer {

namespace {

const pairing::CovariateColumn* nuisance_column(const Dataset& d, const std::string& name) {
  if (!name.empty()) return &d.covariates.at(name);
  for (const auto& c : d.covariates.columns) {
    if (c.spec.constraint == pairing::Constraint::kInvariance) return &c;
  }
  return nullptr;
}

}  // namespace

metrics::FoldMetrics evaluate(const ModelBundle& b, const Dataset& test, const Dataset& probe,
                              const EvalOptions& options) {
  metrics::FoldMetrics f;
  const numcore::Tensor z = functors::encode(b, test.features);
  if (b.classifier) f.acc = metrics::accuracy_of(functors::classify(b, z), test.labels);
  if (const auto* col = nuisance_column(probe, options.nuisance)) {
    const numcore::Tensor zp = functors::encode(b, probe.features);
    const auto groups = metrics::groups_by_code(col->codes);
    if (groups.size() >= 2) f.mmd_x100 = 100.0 * metrics::metric_mmd(zp, groups, options.mmd_sigma);
    const auto r = metrics::metric_adv(zp, col->codes, options.adv);
    f.adv = r.adv;
    f.chance = r.chance;
  }
  for (const auto& [cov, m] : b.morphisms) {
    const auto idx = test.covariates.find(cov);
    if (!idx) continue;
    const std::set<int> present(test.covariates.columns[*idx].codes.begin(),
                                test.covariates.columns[*idx].codes.end());
    for (int c : present) {
      if (!present.count(c + 1)) continue;
      const auto t = metrics::transition_metrics(b, test, cov, c, c + 1);
      f.d[metrics::transition_key(cov, c, c + 1)] = t.d;
      f.cs[metrics::transition_key(cov, c, c + 1)] = t.cs;
    }
  }
  return f;
}

namespace {

void check_folds(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (config.folds < 2) fail(ErrorKind::kInvalidArgument, "cross validation needs folds >= 2");
  if (config.folds > data.size()) {
    fail(ErrorKind::kInvalidArgument, "more folds than samples");
  }
}

struct FoldData {
  std::vector<std::size_t> train_rows;
  Dataset scaled;  // every row, standardized with the training rows
  Dataset train_set;
  Dataset test_set;
};

FoldData prepare_fold(const Dataset& data, const std::vector<std::size_t>& test_rows) {
  FoldData f;
  std::vector<bool> in_test(data.size(), false);
  for (std::size_t r : test_rows) in_test[r] = true;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!in_test[r]) f.train_rows.push_back(r);
  }
  f.scaled = data;
  const auto st = dataio::Standardizer::fit(data.features, data.numeric_columns, f.train_rows);
  st.apply(f.scaled.features);
  f.train_set = f.scaled.subset(f.train_rows);
  f.test_set = f.scaled.subset(test_rows);
  return f;
}

// Runs fn(k) for k < n on up to `threads` workers; the first failure (by
// fold index) is rethrown.
void for_each_fold(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next++) < n;) {
        try {
          fn(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

metrics::FoldMetrics score_fold(const ModelBundle& b, const FoldData& f, const EvalOptions& options,
                                std::uint64_t fold_seed) {
  EvalOptions eval = options;
  eval.adv.seed = derive_seed(fold_seed, "adv");
  return evaluate(b, f.test_set, options.invariance_all_rows ? f.scaled : f.test_set, eval);
}

}  // namespace

std::vector<std::vector<std::size_t>> cv_folds(const Dataset& data, const TrainConfig& config) {
  check_folds(data, config);
  return dataio::kfold_split(data.labels, config.folds, derive_seed(config.seed, "folds"));
}

CvResult train_cv(const Dataset& data, const BundleFactory& make, const TrainConfig& config,
                  const EvalOptions& options, std::size_t threads) {
  const auto folds = cv_folds(data, config);
  CvResult out;
  out.runs.resize(folds.size());
  std::vector<metrics::FoldMetrics> scores(folds.size());
  for_each_fold(folds.size(), threads, [&](std::size_t k) {
    const FoldData f = prepare_fold(data, folds[k]);
    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, "fold", k);
    FoldRun& run = out.runs[k];
    run.test_rows = folds[k];
    run.bundle = make(fold_config.seed);
    run.log = train(f.train_set, run.bundle, fold_config);
    scores[k] = score_fold(run.bundle, f, options, fold_config.seed);
  });
  out.report.seed = config.seed;
  out.report.folds = std::move(scores);
  out.report.aggregate();
  return out;
}

metrics::MetricsReport evaluate_cv(const Dataset& data, const std::vector<ModelBundle>& bundles,
                                   const TrainConfig& config, const EvalOptions& options,
                                   std::size_t threads) {
  const auto folds = cv_folds(data, config);
  if (bundles.size() != folds.size()) {
    fail(ErrorKind::kInvalidArgument, std::to_string(bundles.size()) + " fold models for " +
                                          std::to_string(folds.size()) + " folds");
  }
  std::vector<metrics::FoldMetrics> scores(folds.size());
  for_each_fold(folds.size(), threads, [&](std::size_t k) {
    scores[k] = score_fold(bundles[k], prepare_fold(data, folds[k]), options,
                           derive_seed(config.seed, "fold", k));
  });
  metrics::MetricsReport report;
  report.seed = config.seed;
  report.folds = std::move(scores);
  report.aggregate();
  return report;
}

}  // namespace catharm::trainer
