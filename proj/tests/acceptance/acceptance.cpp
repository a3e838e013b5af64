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

// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   catharm_acceptance [--only 1,2,...] [--threads N]
//
// Criteria 1-6 train the experiments in configs/ from scratch; 7 runs the
// property checks and the lambda ablation. Exit status is 0 iff every
// selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "catharm/cli/experiments.hpp"
#include "catharm/cli/render.hpp"
#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/functors/morphism.hpp"
#include "catharm/numcore/ops.hpp"
#include "catharm/objective/losses.hpp"
#include "catharm/specdsl/plan.hpp"
#include "catharm/trainer/checkpoint.hpp"
#include "oracles/pairs_oracle.hpp"

namespace catharm {
namespace {

namespace fs = std::filesystem;
using cli::json;
using numcore::Tensor;
using Clock = std::chrono::steady_clock;

const fs::path kConfigs = fs::path(CATHARM_SOURCE_DIR) / "configs";
std::size_t g_threads = 1;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

specdsl::ExperimentPlan load(const std::string& name) {
  const fs::path p = kConfigs / (name + ".cat");
  const auto r = specdsl::parse_file(p.string());
  if (!r.ok()) fail(ErrorKind::kInvalidArgument, p.string() + ":" + r.errors[0].to_string());
  return *r.plan;
}

struct Run {
  cli::TrainOutput out;
  double seconds = 0.0;
};

Run train(const std::string& name, double lambda_override = -1.0) {
  specdsl::ExperimentPlan plan = load(name);
  if (lambda_override >= 0.0) {
    for (auto& [cov, l] : plan.train.weights.lambda_per_covariate) l = lambda_override;
  }
  const auto t0 = Clock::now();
  Run r{cli::run_training(plan, kConfigs, g_threads), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

double mean_of(const Run& r, const char* key) { return r.out.report.at("mean").at(key).get<double>(); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "!") + what);
  }
};

// ---- 1-3: tabular invariance

Outcome fairness(const std::string& naive_name, const std::string& inv_name, double acc_min, double mmd_max,
                 bool need_reduction, double minutes) {
  Outcome o;
  const Run naive = train(naive_name);
  const Run inv = train(inv_name);
  const double acc = mean_of(inv, "acc"), mmd = mean_of(inv, "mmd_x100"), adv = mean_of(inv, "adv");
  const double mmd0 = mean_of(naive, "mmd_x100"), adv0 = mean_of(naive, "adv");
  o.require(acc >= acc_min, "ACC " + fmt(acc) + " >= " + fmt(acc_min, 0));
  o.require(mmd <= mmd_max, "MMDx100 " + fmt(mmd) + " <= " + fmt(mmd_max, 1));
  if (need_reduction) o.require(mmd0 >= 3.0 * mmd, "naive MMDx100 " + fmt(mmd0) + " >= 3x");
  o.require(adv0 - adv >= 5.0, "ADV " + fmt(adv) + " vs naive " + fmt(adv0) + " (>= 5 below)");
  const double total = naive.seconds + inv.seconds;
  o.require(total <= minutes * 60.0, "time " + fmt(total, 0) + "s <= " + fmt(minutes, 0) + " min");
  return o;
}

Outcome german_age() {
  Outcome o;
  const Run naive = train("german_naive");
  const Run age = train("german_age");
  const double acc = mean_of(age, "acc"), acc0 = mean_of(naive, "acc"), mmd = mean_of(age, "mmd_x100");
  o.require(std::abs(acc - acc0) <= 3.0, "ACC " + fmt(acc) + " within 3 of naive " + fmt(acc0));
  o.require(mmd <= 3.0, "MMDx100 " + fmt(mmd) + " <= 3.0");
  return o;
}

// ---- 4-6: morphisms

Outcome successor() {
  Outcome o;
  const specdsl::ExperimentPlan plan = load("mnist_successor");
  const Run r = train("mnist_successor");
  const json& s = r.out.report.at("successor");
  const double success = s.at("success").get<double>();
  const auto& cov = plan.covariates.at(0);
  o.require(plan.latent.n == 32 && cov.morphism == pairing::MorphismKind::kOrthogonal, "n=32, orthogonal W");
  o.require(s.at("cases").get<std::size_t>() == 100 * 9, std::to_string(s.at("cases").get<std::size_t>()) +
                                                              " cases (100 seeds x d in -4..4)");
  std::string per;
  for (int d = -4; d <= 4; ++d) {
    per += (per.empty() ? "" : " ") + std::to_string(d) + ":" + fmt(s.at("per_d").at(std::to_string(d)).get<double>(), 0);
  }
  o.require(success >= 80.0, "nearest-class success " + fmt(success, 1) + "% >= 80% [" + per + "]");
  o.notes.push_back("time " + fmt(r.seconds, 0) + "s");
  return o;
}

Outcome transforms() {
  Outcome o;
  const Run r = train("mnist_transforms");
  const json& s = r.out.report.at("transforms");
  const double g = s.at("generalization_ratio").get<double>();
  const double c = s.at("worst_composition_ratio").get<double>();
  const json& rot = s.at("rotate_mse");
  o.require(g <= 2.0, "(a) rotation MSE@20 " + fmt(rot.at("20").get<double>(), 4) + " / MSE@10 " +
                          fmt(rot.at("10").get<double>(), 4) + " = " + fmt(g, 3) + " <= 2");
  o.require(c <= 3.0, "(b) worst composition ratio " + fmt(c, 3) + " <= 3");
  o.notes.push_back("time " + fmt(r.seconds, 0) + "s");
  return o;
}

Outcome hypothetical() {
  Outcome o;
  const specdsl::ExperimentPlan plan = load("synth_monotone");
  o.require(plan.dataset.samples == 5000 && plan.dataset.effect == 2.0, "m=5000, effect=2");
  const Run r = train("synth_monotone");
  const cli::Dataset data = cli::scaled_for(r.out.checkpoint, cli::load_dataset(plan, kConfigs));
  for (double delta : {1.0, -1.0}) {
    const json rep = cli::hypothetical_report(r.out.checkpoint.bundle, data, "g", delta);
    std::string shifts;
    bool ok = !rep.at("bins").empty();
    for (const auto& bin : rep.at("bins")) {
      const double s = bin.at("shift").at(1).get<double>();
      shifts += (shifts.empty() ? "" : " ") + fmt(s, 3);
      ok = ok && (delta > 0 ? s > 0.0 : s < 0.0);
    }
    o.require(ok, std::string("delta ") + (delta > 0 ? "+1" : "-1") + " class-1 shifts [" + shifts + "] " +
                      (delta > 0 ? "> 0" : "< 0"));
  }
  return o;
}

// ---- 7: properties

Tensor product(const Tensor& a, const Tensor& b) {
  return Tensor::from_matrix(numcore::RowMatrix(a.matrix() * b.matrix()));
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t({r, c});
  for (double& v : t.data()) v = standard_normal(rng);
  return t;
}

double graph_value(const std::function<numcore::Node(numcore::Graph&)>& build) {
  numcore::Graph g;
  g.set_output(build(g));
  return g.forward().item();
}

Outcome properties() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(20261014);

  const auto grads = cli::grad_check_suite(7);
  double worst = 0.0;
  bool grads_ok = true;
  for (const auto& c : grads) {
    worst = std::max(worst, c.max_rel_error);
    grads_ok = grads_ok && c.pass && c.max_rel_error <= 1e-5;
  }
  o.require(grads_ok, "gradcheck " + std::to_string(grads.size()) + " checks, worst rel-err " + sci(worst));

  functors::Morphism orth = functors::Morphism::near_identity("a", 6, true, rng, 0.3);
  functors::retract_orthogonal(orth);
  const functors::Morphism lin = functors::Morphism::near_identity("b", 6, false, rng, 0.1);
  double power_err = 0.0, inverse_err = 0.0;
  bool identity_exact = true;
  for (const functors::Morphism* m : {static_cast<const functors::Morphism*>(&orth), &lin}) {
    const Tensor w0 = functors::morphism_power(*m, 0);
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 6; ++c) identity_exact = identity_exact && w0.at(r, c) == (r == c ? 1.0 : 0.0);
    }
    for (int a = -3; a <= 3; ++a) {
      for (int b = -3; b <= 3; ++b) {
        const Tensor lhs = functors::morphism_power(*m, a + b);
        const Tensor rhs = product(functors::morphism_power(*m, a), functors::morphism_power(*m, b));
        power_err = std::max(power_err, numcore::max_abs_diff(lhs, rhs));
      }
    }
  }
  for (double a : {0.5, -0.7, 1.25}) {
    for (double b : {0.5, 2.0, -1.5}) {
      const Tensor lhs = functors::morphism_power(orth, a + b);
      const Tensor rhs = product(functors::morphism_power(orth, a), functors::morphism_power(orth, b));
      power_err = std::max(power_err, numcore::max_abs_diff(lhs, rhs));
    }
  }
  const Tensor z = random_matrix(10, 6, rng);
  for (int d = -10; d <= 10; ++d) {
    const Tensor back = functors::apply_morphism(orth, -d, functors::apply_morphism(orth, d, z));
    inverse_err = std::max(inverse_err, numcore::max_abs_diff(back, z));
  }
  o.require(power_err <= 1e-8, "power law err " + sci(power_err) + " <= 1e-8");
  o.require(identity_exact, "W^0 = I exactly");
  o.require(inverse_err <= 1e-8, "orthogonal inverse err " + sci(inverse_err) + " <= 1e-8");

  const Tensor A = random_matrix(7, 3, rng), B = random_matrix(5, 3, rng);
  auto mmd = [&](const Tensor& x, const Tensor& y) {
    return graph_value([&](numcore::Graph& g) { return numcore::mmd_rbf(g.constant(x), g.constant(y), 1.0); });
  };
  const double self = mmd(A, A), ab = mmd(A, B), ba = mmd(B, A);
  const double single = mmd(Tensor::matrix({{0.0}}), Tensor::matrix({{1.0}}));
  const double closed = 2.0 - 2.0 * std::exp(-0.5);
  const bool mmd_ok = std::abs(self) <= 1e-12 && ab == ba && std::abs(single - closed) <= 1e-12 &&
                      std::abs(closed - 0.7869) < 1e-4;
  o.require(mmd_ok, "MMD(A,A)=" + sci(self) + ", symmetric, singleton " + fmt(single, 6));

  functors::Morphism m = orth;
  const Tensor lat = random_matrix(8, 6, rng);
  const std::vector<pairing::Pair> d0 = {{0, 1, 0}, {2, 5, 0}, {7, 3, 0}, {4, 6, 0}};
  const double s = graph_value([&](numcore::Graph& g) {
    objective::PowerCache cache(g, m);
    return objective::structure_loss(g, cache, g.constant(lat), d0);
  });
  const double inv = graph_value([&](numcore::Graph& g) { return objective::invariance_loss(g, g.constant(lat), d0); });
  o.require(std::abs(s - inv) <= 1e-12, "d=0 structure vs invariance |diff| " + sci(std::abs(s - inv)) + " <= 1e-12");

  std::size_t cases = 0;
  const std::size_t bad = oracles::pair_oracle_mismatches(4242, 20, cases);
  o.require(bad == 0, "pairs == brute force on " + std::to_string(cases) + " cases (" + std::to_string(bad) +
                          " mismatches)");

  cli::TrainOutput small;
  {
    specdsl::ExperimentPlan plan = load("synth_monotone");
    plan.dataset.samples = 300;
    plan.train.epochs = 2;
    small = cli::run_training(plan, kConfigs, 1);
  }
  const std::string bytes = trainer::encode_checkpoint(small.checkpoint);
  const trainer::Checkpoint back = trainer::decode_checkpoint(bytes);
  bool folds_equal = back.folds.size() == small.checkpoint.folds.size();
  for (std::size_t k = 0; folds_equal && k < back.folds.size(); ++k) {
    folds_equal = trainer::bundles_bit_equal(back.folds[k], small.checkpoint.folds[k]);
  }
  o.require(trainer::encode_checkpoint(back) == bytes &&
                trainer::bundles_bit_equal(back.bundle, small.checkpoint.bundle) && folds_equal,
            "checkpoint round trip bit-exact");

  std::size_t configs = 0;
  bool dsl_ok = true;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".cat") continue;
    ++configs;
    const auto first = specdsl::parse_file(e.path().string());
    if (!first.ok()) {
      dsl_ok = false;
      continue;
    }
    const std::string text = specdsl::format_plan(*first.plan);
    const auto second = specdsl::parse(text);
    dsl_ok = dsl_ok && second.ok() && specdsl::format_plan(*second.plan) == text &&
             specdsl::config_hash(*second.plan) == specdsl::config_hash(*first.plan);
  }
  o.require(dsl_ok && configs > 0, "DSL parse/format round trip on " + std::to_string(configs) + " configs");

  std::vector<double> mmds;
  std::string trend;
  for (double lambda : {0.001, 0.01, 0.1}) {
    mmds.push_back(mean_of(train("german_inv", lambda), "mmd_x100"));
    trend += (trend.empty() ? "" : " ") + fmt(lambda, 3) + ":" + fmt(mmds.back());
  }
  o.require(mmds[1] <= mmds[0] && mmds[2] <= mmds[1], "German MMDx100 non-increasing in lambda [" + trend + "]");

  const double t = seconds_since(t0);
  o.require(t <= 120.0, "time " + fmt(t, 0) + "s <= 2 min");
  return o;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace catharm

int main(int argc, char** argv) {
  using namespace catharm;
  CLI::App app{"catharm acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--threads", g_threads, "Workers for cross-validation folds")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  set_log_quiet(true);

  const std::vector<Criterion> all = {
      {1, "German invariance", [] { return fairness("german_naive", "german_inv", 71.0, 2.0, true, 5.0); }},
      {2, "Adult invariance", [] { return fairness("adult_naive", "adult_inv", 81.0, 3.0, false, 15.0); }},
      {3, "German age equivariance", german_age},
      {4, "MNIST successor morphism", successor},
      {5, "MNIST rotate/scale morphisms", transforms},
      {6, "synthetic hypotheticals", hypothetical},
      {7, "property suites", properties},
  };
  const std::set<int> selected(only.begin(), only.end());
  bool all_pass = true;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("error: ") + e.what());
    }
    all_pass = all_pass && o.pass;
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << notes << std::endl;
  }
  return all_pass ? 0 : 1;
}
