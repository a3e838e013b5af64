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

#include "catharm/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/functors/morphism.hpp"

namespace catharm::metrics {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix rows_of(const Tensor& x, const std::vector<std::size_t>& rows) {
  const auto m = x.matrix();
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

double kernel_sum(const Matrix& a, const Matrix& b, double gamma) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      s += std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return s;
}

// Strict weak order on groups so the cross term is summed the same way
// whichever operand comes first.
bool precedes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

double mmd_pair(const Matrix& a, const Matrix& b, double sigma) {
  const double gamma = 1.0 / (2.0 * sigma * sigma);
  const double na = static_cast<double>(a.rows());
  const double nb = static_cast<double>(b.rows());
  const double cross = precedes(b, a) ? kernel_sum(b, a, gamma) : kernel_sum(a, b, gamma);
  const double v = kernel_sum(a, a, gamma) / (na * na) + kernel_sum(b, b, gamma) / (nb * nb) -
                   2.0 * cross / (na * nb);
  return std::sqrt(std::max(0.0, v));
}

struct Probe {
  Matrix w;  // (k + 1) x classes, last row is the bias
  Eigen::RowVectorXd mean, scale;
};

Eigen::MatrixXd design(const Matrix& x, const Probe& p) {
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    d.row(i).head(x.cols()) = (x.row(i) - p.mean).cwiseQuotient(p.scale);
    d(i, x.cols()) = 1.0;
  }
  return d;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i).array() -= p.row(i).maxCoeff();
    p.row(i) = p.row(i).array().exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Probe fit_probe(const Matrix& x, const std::vector<int>& y, int classes, const AdvOptions& o) {
  Probe p;
  p.mean = Eigen::RowVectorXd::Zero(x.cols());
  p.scale = Eigen::RowVectorXd::Ones(x.cols());
  if (o.standardize) {
    p.mean = x.colwise().mean();
    p.scale = ((x.rowwise() - p.mean).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index j = 0; j < p.scale.size(); ++j) {
      if (!(p.scale[j] > 1e-12)) p.scale[j] = 1.0;
    }
  }
  const Eigen::MatrixXd d = design(x, p);
  std::vector<double> count(static_cast<std::size_t>(classes), 0.0);
  for (int c : y) count[static_cast<std::size_t>(c)] += 1.0;
  Eigen::VectorXd weight(d.rows());
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(d.rows(), classes);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
    weight[i] = 1.0 / (static_cast<double>(classes) * count[c]);
    onehot(i, static_cast<Eigen::Index>(c)) = 1.0;
  }
  // The softmax cross-entropy Hessian is bounded by 1/2 x x^T per row.
  const Eigen::MatrixXd h = d.transpose() * (d.array().colwise() * weight.array()).matrix();
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .maxCoeff();
  const double step = 1.0 / (0.5 * lmax + 2.0 * o.l2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d.cols(), classes);
  for (std::size_t it = 0; it < o.iterations; ++it) {
    const Eigen::MatrixXd err = softmax_rows(d * w) - onehot;
    Eigen::MatrixXd grad = d.transpose() * (err.array().colwise() * weight.array()).matrix();
    grad.topRows(d.cols() - 1) += 2.0 * o.l2 * w.topRows(d.cols() - 1);
    w -= step * grad;
  }
  p.w = w;
  return p;
}

double balanced_accuracy(const Probe& p, const Matrix& x, const std::vector<int>& y, int classes) {
  const Eigen::MatrixXd logits = design(x, p) * p.w;
  std::vector<double> hit(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> total(static_cast<std::size_t>(classes), 0.0);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
    total[c] += 1.0;
    if (static_cast<std::size_t>(arg) == c) hit[c] += 1.0;
  }
  double s = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < hit.size(); ++c) {
    if (total[c] > 0) {
      s += hit[c] / total[c];
      ++present;
    }
  }
  return present ? 100.0 * s / present : 0.0;
}

}  // namespace

double accuracy_of(const Tensor& probabilities, const std::vector<int>& labels) {
  if (labels.empty()) fail(ErrorKind::kInvalidArgument, "accuracy of an empty set");
  if (probabilities.rows() != labels.size()) {
    fail(ErrorKind::kShapeMismatch, "one probability row per label expected");
  }
  const auto p = probabilities.matrix();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index arg = 0;
    p.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

double metric_accuracy(const ModelBundle& b, const Tensor& features, const std::vector<int>& labels) {
  if (!b.classifier) fail(ErrorKind::kInvalidArgument, "bundle has no classifier");
  const Tensor x = features.shape().size() == 1 ? features.reshaped({1, features.size()}) : features;
  return accuracy_of(functors::classify(b, functors::encode(b, x)), labels);
}

std::vector<std::vector<std::size_t>> groups_by_code(const std::vector<int>& codes) {
  std::map<int, std::vector<std::size_t>> g;
  for (std::size_t i = 0; i < codes.size(); ++i) g[codes[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [code, rows] : g) out.push_back(std::move(rows));
  return out;
}

double metric_mmd(const Tensor& latents, const std::vector<std::vector<std::size_t>>& groups,
                  double sigma) {
  if (groups.size() < 2) fail(ErrorKind::kInvalidArgument, "MMD needs at least two groups");
  if (!(sigma > 0.0)) fail(ErrorKind::kInvalidArgument, "MMD bandwidth must be positive");
  std::vector<Matrix> parts;
  for (const auto& g : groups) {
    if (g.empty()) fail(ErrorKind::kInvalidArgument, "MMD group with no samples");
    for (std::size_t r : g) {
      if (r >= latents.rows()) fail(ErrorKind::kInvalidArgument, "MMD row index out of range");
    }
    parts.push_back(rows_of(latents, g));
  }
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < parts.size(); ++a) {
    for (std::size_t b = a + 1; b < parts.size(); ++b) {
      s += mmd_pair(parts[a], parts[b], sigma);
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

AdvResult metric_adv(const Tensor& latents, const std::vector<int>& codes, const AdvOptions& o) {
  if (latents.rows() != codes.size()) fail(ErrorKind::kShapeMismatch, "one code per latent row expected");
  if (o.repeats < 1) fail(ErrorKind::kInvalidArgument, "probe needs at least one repeat");
  // Dense class indices in code order.
  std::map<int, int> index;
  for (int c : codes) index.emplace(c, 0);
  if (index.size() < 2) fail(ErrorKind::kDegenerateInput, "nuisance covariate has a single class");
  int k = 0;
  for (auto& [code, i] : index) i = k++;
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < codes.size(); ++r) by_class[static_cast<std::size_t>(index[codes[r]])].push_back(r);
  for (const auto& rows : by_class) {
    if (rows.size() < 2) fail(ErrorKind::kDegenerateInput, "every nuisance class needs two samples");
  }

  AdvResult result;
  result.chance = 100.0 / k;
  Rng rng(derive_seed(o.seed, "adv-probe"));
  double sum = 0.0;
  for (std::size_t rep = 0; rep < o.repeats; ++rep) {
    std::vector<std::size_t> train, test;
    for (auto rows : by_class) {
      shuffle_indices(rows, rng);
      auto n_train = static_cast<std::size_t>(std::round(o.train_fraction * static_cast<double>(rows.size())));
      n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
      train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
      test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    std::vector<int> ytr, yte;
    for (std::size_t r : train) ytr.push_back(index[codes[r]]);
    for (std::size_t r : test) yte.push_back(index[codes[r]]);
    const Probe p = fit_probe(rows_of(latents, train), ytr, k, o);
    sum += balanced_accuracy(p, rows_of(latents, test), yte, k);
  }
  result.adv = sum / static_cast<double>(o.repeats);
  return result;
}

TransitionResult transition_metrics(const ModelBundle& b, const Dataset& pool,
                                    const std::string& covariate, int c1, int c2) {
  auto mit = b.morphisms.find(covariate);
  if (mit == b.morphisms.end()) {
    fail(ErrorKind::kUnknownCovariate, "bundle has no morphism for '" + covariate + "'");
  }
  const auto& table = pool.covariates;
  const pairing::CovariateColumn& col = table.at(covariate);
  std::vector<std::size_t> sources, targets;
  for (std::size_t r = 0; r < col.codes.size(); ++r) {
    if (col.codes[r] == c1) sources.push_back(r);
    if (col.codes[r] == c2) targets.push_back(r);
  }
  if (targets.empty()) {
    fail(ErrorKind::kEmptyTargetBin, "no pool sample in bin " + std::to_string(c2) + " of '" +
                                         covariate + "'");
  }
  TransitionResult out;
  if (sources.empty()) return out;

  const Tensor z = functors::encode(b, pool.features);
  const Tensor moved = functors::apply_morphism(mit->second, c2 - c1, Tensor::from_matrix(rows_of(z, sources)));
  const Matrix zt = rows_of(z, targets);
  const auto mv = moved.matrix();
  const double n = static_cast<double>(b.latent_dim());

  // Other covariates, z-scored over the pool: the numeric value when known,
  // the bin code otherwise.
  std::vector<std::vector<double>> other;
  for (const auto& c : table.columns) {
    if (c.spec.name == covariate) continue;
    std::vector<double> v(c.codes.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
      v[r] = (r < c.raw.size() && std::isfinite(c.raw[r])) ? c.raw[r] : static_cast<double>(c.codes[r]);
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    for (double& x : v) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
    other.push_back(std::move(v));
  }

  double dsum = 0.0, cssum = 0.0;
  std::size_t cs_count = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < zt.rows(); ++t) {
      const double dist = (mv.row(static_cast<Eigen::Index>(s)) - zt.row(t)).norm();
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<std::size_t>(t);
      }
    }
    const std::size_t match = targets[best];
    out.matches.push_back(match);
    dsum += best_d / n;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& v : other) {
      dot += v[sources[s]] * v[match];
      na += v[sources[s]] * v[sources[s]];
      nb += v[match] * v[match];
    }
    if (na > 0.0 && nb > 0.0) {
      cssum += std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
      ++cs_count;
    } else {
      ++out.cs_skipped;
    }
  }
  out.sources = sources.size();
  out.d = dsum / static_cast<double>(sources.size());
  out.cs = cs_count ? cssum / static_cast<double>(cs_count) : 0.0;
  return out;
}

double metric_min_distance(const ModelBundle& b, const Dataset& pool, const std::string& covariate,
                           int c1, int c2) {
  return transition_metrics(b, pool, covariate, c1, c2).d;
}

double metric_cosine_similarity(const ModelBundle& b, const Dataset& pool,
                                const std::string& covariate, int c1, int c2) {
  return transition_metrics(b, pool, covariate, c1, c2).cs;
}

std::string transition_key(const std::string& covariate, int c1, int c2) {
  return covariate + ":" + std::to_string(c1) + "->" + std::to_string(c2);
}

void MetricsReport::aggregate() {
  mean = FoldMetrics{};
  std = FoldMetrics{};
  if (folds.empty()) return;
  const double k = static_cast<double>(folds.size());
  auto stats = [&](auto get, double& mu, double& sd) {
    double s = 0.0;
    for (const FoldMetrics& f : folds) s += get(f);
    mu = s / k;
    double v = 0.0;
    for (const FoldMetrics& f : folds) v += (get(f) - mu) * (get(f) - mu);
    sd = folds.size() > 1 ? std::sqrt(v / (k - 1.0)) : 0.0;
  };
  stats([](const FoldMetrics& f) { return f.acc; }, mean.acc, std.acc);
  stats([](const FoldMetrics& f) { return f.mmd_x100; }, mean.mmd_x100, std.mmd_x100);
  stats([](const FoldMetrics& f) { return f.adv; }, mean.adv, std.adv);
  stats([](const FoldMetrics& f) { return f.chance; }, mean.chance, std.chance);
  for (const auto& [key, v] : folds.front().d) {
    stats([&key](const FoldMetrics& f) { return f.d.count(key) ? f.d.at(key) : 0.0; }, mean.d[key], std.d[key]);
  }
  for (const auto& [key, v] : folds.front().cs) {
    stats([&key](const FoldMetrics& f) { return f.cs.count(key) ? f.cs.at(key) : 0.0; }, mean.cs[key], std.cs[key]);
  }
}

namespace {
nlohmann::json fold_json(const FoldMetrics& f) {
  return {{"acc", f.acc}, {"mmd_x100", f.mmd_x100}, {"adv", f.adv},
          {"chance", f.chance}, {"d", f.d}, {"cs", f.cs}};
}
}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["folds"] = nlohmann::json::array();
  for (const FoldMetrics& f : folds) j["folds"].push_back(fold_json(f));
  j["mean"] = fold_json(mean);
  j["std"] = fold_json(std);
  return j;
}

std::string MetricsReport::table() const {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2);
  ss << std::left << std::setw(8) << "fold" << std::right << std::setw(10) << "ACC" << std::setw(12)
     << "MMDx100" << std::setw(10) << "ADV" << std::setw(10) << "chance" << '\n';
  auto line = [&ss](const std::string& name, const FoldMetrics& f) {
    ss << std::left << std::setw(8) << name << std::right << std::setw(10) << f.acc << std::setw(12)
       << f.mmd_x100 << std::setw(10) << f.adv << std::setw(10) << f.chance << '\n';
  };
  for (std::size_t i = 0; i < folds.size(); ++i) line(std::to_string(i + 1), folds[i]);
  line("mean", mean);
  line("std", std);
  for (const auto& [key, v] : mean.d) {
    ss << key << "  D " << v << " (" << std.d.at(key) << ")";
    if (mean.cs.count(key)) ss << "  CS " << mean.cs.at(key) << " (" << std.cs.at(key) << ")";
    ss << '\n';
  }
  return ss.str();
}

}  // namespace catharm::metrics
