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

#include "catharm/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/functors/morphism.hpp"

namespace catharm::trainer {

using numcore::Tensor;
using objective::BatchData;
using objective::CovariateTerm;
using objective::TermKind;
using pairing::Pair;

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "learning_rate must be positive");
  }
  if (max_pairs < 1) fail(ErrorKind::kInvalidArgument, "max_pairs must be >= 1");
  if (mmd_sigma < 0.0) fail(ErrorKind::kInvalidArgument, "mmd_sigma must be >= 0");
  weights.validate();
}

void Optimizer::step(const std::vector<std::pair<std::string, Tensor*>>& params,
                     const std::map<std::string, Tensor>& grads) {
  ++t_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const auto g = it->second.data();
    auto w = p->data();
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
      continue;
    }
    auto [mi, fresh_m] = m_.try_emplace(name, p->shape());
    auto [vi, fresh_v] = v_.try_emplace(name, p->shape());
    auto m = mi->second.data();
    auto v = vi->second.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
    }
  }
}

namespace {

Tensor gather(const Tensor& x, const std::vector<std::size_t>& rows) {
  const std::size_t p = x.cols();
  std::vector<double> out;
  out.reserve(rows.size() * p);
  for (std::size_t r : rows) {
    auto row = x.data().subspan(r * p, p);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), p}, std::move(out));
}

TermKind kind_for(const pairing::CovariateSpec& s) {
  if (s.constraint == pairing::Constraint::kEquivariance) return TermKind::kStructure;
  return s.penalty == pairing::Penalty::kMmd ? TermKind::kMmd : TermKind::kInvariance;
}

bool finite(const LossBreakdown& b, std::string& bad) {
  auto check = [&bad](double v, const std::string& name) {
    if (!std::isfinite(v) && bad.empty()) bad = name;
  };
  check(b.reconstruction, "reconstruction");
  check(b.prediction, "prediction");
  for (const auto& [name, v] : b.structure) check(v, "covariate " + name);
  check(b.orthogonality, "orthogonality");
  check(b.total, "total");
  return bad.empty();
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b) {
  acc.total += b.total;
  acc.reconstruction += b.reconstruction;
  acc.prediction += b.prediction;
  acc.orthogonality += b.orthogonality;
  for (const auto& [name, v] : b.structure) acc.structure[name] += v;
}

struct TaggedPair {
  std::size_t covariate;
  Pair pair;
};

}  // namespace

LossBreakdown train_step(ModelBundle& bundle, const BatchData& batch, const TrainConfig& config,
                         Optimizer& optimizer) {
  auto lg = objective::build_total_loss(bundle, batch, config.weights, config.max_power);
  try {
    lg->graph.forward();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kNonFinite) {
      fail(ErrorKind::kNonFinite, std::string("training aborted: ") + e.what());
    }
    throw;
  }
  LossBreakdown b = lg->breakdown();
  std::string bad;
  if (!finite(b, bad)) fail(ErrorKind::kNonFinite, "training aborted: " + bad + " loss is not finite");
  if (!lg->graph.parameter_names().empty()) {
    optimizer.step(bundle.parameters(), lg->graph.backward());
  }
  return b;
}

TrainResult train(const Dataset& data, ModelBundle& bundle, const TrainConfig& config,
                  const PairSource& source) {
  config.validate();
  bundle.validate();
  if (data.size() == 0) fail(ErrorKind::kInvalidArgument, "training set is empty");
  if (data.dim() != bundle.input_dim()) {
    fail(ErrorKind::kDimensionMismatch, "dataset dimension " + std::to_string(data.dim()) +
                                            " differs from the encoder input " +
                                            std::to_string(bundle.input_dim()));
  }
  const auto& columns = data.covariates.columns;
  Optimizer opt(config.optimizer);
  Rng rng(derive_seed(config.seed, "batches"));
  TrainResult result;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<pairing::PairSet> external = source.per_epoch ? source.per_epoch(epoch) : source.fixed;
    std::vector<bool> has_external(columns.size(), false);
    std::vector<TaggedPair> pooled;
    for (const pairing::PairSet& ps : external) {
      const auto col = data.covariates.find(ps.covariate);
      if (!col) fail(ErrorKind::kUnknownCovariate, "pairs for unknown covariate '" + ps.covariate + "'");
      has_external[*col] = true;
      for (const Pair& p : ps.entries) pooled.push_back({*col, p});
    }

    // Batches of rows (plus the external pairs the batch owns).
    std::vector<std::vector<std::size_t>> batch_rows;
    std::vector<std::vector<TaggedPair>> batch_pairs;
    if (pooled.empty()) {
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_indices(order, rng);
      for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
        const std::size_t e = std::min(order.size(), s + config.batch_size);
        batch_rows.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                                order.begin() + static_cast<std::ptrdiff_t>(e));
        batch_pairs.emplace_back();
      }
    } else {
      std::vector<std::size_t> order(pooled.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_indices(order, rng);
      for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
        const std::size_t e = std::min(order.size(), s + config.batch_size);
        std::vector<TaggedPair> chunk;
        std::vector<std::size_t> rows;
        for (std::size_t k = s; k < e; ++k) {
          chunk.push_back(pooled[order[k]]);
          rows.push_back(chunk.back().pair.i);
          rows.push_back(chunk.back().pair.j);
        }
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        batch_rows.push_back(std::move(rows));
        batch_pairs.push_back(std::move(chunk));
      }
    }

    EpochLog log;
    log.epoch = epoch;
    for (std::size_t b = 0; b < batch_rows.size(); ++b) {
      const std::vector<std::size_t>& rows = batch_rows[b];
      std::map<std::size_t, std::size_t> local;
      for (std::size_t k = 0; k < rows.size(); ++k) local[rows[k]] = k;
      BatchData batch;
      batch.features = gather(data.features, rows);
      for (std::size_t r : rows) batch.labels.push_back(data.labels[r]);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const pairing::CovariateSpec& spec = columns[c].spec;
        CovariateTerm term{spec.name, kind_for(spec), {}, {}, config.mmd_sigma};
        if (config.weights.lambda_s * config.weights.covariate(spec.name) <= 0) continue;
        if (term.kind == TermKind::kMmd) {
          std::map<int, std::vector<std::size_t>> groups;
          for (std::size_t k = 0; k < rows.size(); ++k) groups[columns[c].codes[rows[k]]].push_back(k);
          for (auto& [code, g] : groups) term.groups.push_back(std::move(g));
          if (term.groups.size() < 2) continue;
          if (term.sigma <= 0.0) {
            term.sigma = objective::median_bandwidth(functors::encode(bundle, batch.features));
          }
        } else if (has_external[c]) {
          for (const TaggedPair& tp : batch_pairs[b]) {
            if (tp.covariate == c) {
              term.pairs.push_back({local.at(tp.pair.i), local.at(tp.pair.j), tp.pair.d});
            }
          }
        } else {
          pairing::PairSet ps = pairing::enumerate_pairs(
              data.covariates, data.labels, spec.name,
              pairing::PairOptions::from_spec(spec, config.max_pairs), rows,
              derive_seed(config.seed, "batch-pairs",
                          static_cast<std::uint64_t>(epoch) * 1000003ULL + b));
          for (const Pair& p : ps.entries) term.pairs.push_back({local.at(p.i), local.at(p.j), p.d});
        }
        log.pairs[spec.name] += term.pairs.size();
        batch.terms.push_back(std::move(term));
      }
      accumulate(log.mean, train_step(bundle, batch, config, opt));
    }
    const double nb = static_cast<double>(batch_rows.size());
    log.mean.total /= nb;
    log.mean.reconstruction /= nb;
    log.mean.prediction /= nb;
    log.mean.orthogonality /= nb;
    for (auto& [name, v] : log.mean.structure) v /= nb;
    for (const auto& col : columns) {
      if (col.spec.constraint == pairing::Constraint::kEquivariance &&
          config.weights.lambda_s * config.weights.covariate(col.spec.name) > 0 &&
          log.pairs[col.spec.name] == 0) {
        log_warning("epoch " + std::to_string(epoch) + ": no pairs for equivariant covariate '" +
                    col.spec.name + "'");
      }
    }
    if (config.retract) {
      for (auto& [name, m] : bundle.morphisms) {
        if (m.orthogonal) functors::retract_orthogonal(m);
      }
    }
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace catharm::trainer
