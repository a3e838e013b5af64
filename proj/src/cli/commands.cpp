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

#include "catharm/cli/commands.hpp"

#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "catharm/cli/experiments.hpp"
#include "catharm/cli/render.hpp"
#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::cli {

namespace {

// Spec problems are reported line by line and map to exit code 1.
struct SpecFailure {
  std::vector<std::string> lines;
};

struct LoadedSpec {
  ExperimentPlan plan;
  fs::path base_dir;
};

LoadedSpec load_spec(const std::string& path) {
  specdsl::ParseResult r = specdsl::parse_file(path);
  if (!r.ok()) {
    SpecFailure f;
    for (const auto& e : r.errors) f.lines.push_back(path + ":" + e.to_string());
    throw f;
  }
  return {*r.plan, fs::absolute(path).parent_path()};
}

// The spec for a checkpoint: an explicit --spec, else the copy stored at
// training time (paths still resolve against the original spec directory).
LoadedSpec spec_for(const trainer::Checkpoint& ck, const std::string& spec_path) {
  if (!spec_path.empty()) return load_spec(spec_path);
  if (!ck.extra.contains("plan")) fail(ErrorKind::kInvalidArgument, "checkpoint stores no spec; pass --spec");
  specdsl::ParseResult r = specdsl::parse(ck.extra.at("plan").get<std::string>());
  if (!r.ok()) fail(ErrorKind::kInvalidArgument, "stored spec does not parse: " + r.errors[0].to_string());
  return {*r.plan, fs::path(ck.extra.value("spec_dir", "."))};
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text[0] == '-') {
    throw SpecFailure{{what + " must be a non-negative integer, got '" + text + "'"}};
  }
  return v;
}

// Flag over environment over spec.
void apply_seed(ExperimentPlan& plan, const std::string& flag) {
  if (!flag.empty()) {
    plan.train.seed = parse_seed(flag, "--seed");
  } else if (const char* env = std::getenv("CATHARM_SEED"); env && *env) {
    plan.train.seed = parse_seed(env, "CATHARM_SEED");
  }
}

std::string with_newline(const json& j) { return j.dump(2) + "\n"; }

void check_hash(const trainer::Checkpoint& ck, const ExperimentPlan& plan, bool force) {
  const std::string h = specdsl::config_hash(plan);
  if (h == ck.config_hash) return;
  log_warning("config hash mismatch: checkpoint " + ck.config_hash + ", spec " + h);
  if (!force) fail(ErrorKind::kHashMismatch, "spec file does not match the checkpoint (use --force to proceed)");
}

int cmd_train(const std::string& spec, const std::string& out, const std::string& seed, std::size_t threads) {
  LoadedSpec s = load_spec(spec);
  apply_seed(s.plan, seed);
  TrainOutput r = run_training(s.plan, s.base_dir, threads);
  r.checkpoint.extra["spec_dir"] = s.base_dir.string();
  fs::create_directories(out);
  trainer::save_checkpoint(r.checkpoint, fs::path(out) / "model.cthm");
  write_file_atomic(fs::path(out) / "report.json", with_newline(r.report));
  write_file_atomic(fs::path(out) / "losses.csv", r.losses_csv);
  std::cout << r.summary;
  return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& spec, const std::string& report, bool force,
             std::size_t threads) {
  const trainer::Checkpoint ck = trainer::load_checkpoint(ckpt);
  const LoadedSpec s = spec_for(ck, spec);
  check_hash(ck, s.plan, force);
  write_file_atomic(report, with_newline(run_evaluation(ck, s.plan, s.base_dir, threads)));
  return kExitOk;
}

int cmd_traverse(const std::string& ckpt, const std::string& spec, std::size_t index,
                 const std::vector<std::string>& plans, const std::string& out, std::string csv) {
  const trainer::Checkpoint ck = trainer::load_checkpoint(ckpt);
  const LoadedSpec s = spec_for(ck, spec);
  const Dataset data = scaled_for(ck, load_dataset(s.plan, s.base_dir));
  if (!data.is_image()) fail(ErrorKind::kNonImageDataset, "traverse renders image datasets only");
  if (index >= data.size()) {
    fail(ErrorKind::kValueOutOfRange, "index " + std::to_string(index) + " outside the " +
                                          std::to_string(data.size()) + " images");
  }
  // Nearest-class pool: the successor pool, or every other image.
  std::vector<std::size_t> pool;
  if (ck.extra.value("experiment", "") == "successor") {
    for (std::size_t r : successor_split(data, s.plan.dataset).pool) {
      if (r != index) pool.push_back(r);
    }
  } else {
    for (std::size_t r = 0; r < data.size(); ++r) {
      if (r != index) pool.push_back(r);
    }
  }
  const Dataset ref = data.subset(pool);
  const numcore::Tensor image = data.features.row(index);
  std::vector<std::vector<numcore::Tensor>> grid;
  std::ostringstream table;
  table << "plan,tile,steps,label,mse,pool_index\n";
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto plan = latentnav::TraversalPlan::parse(plans[p]);
    std::vector<numcore::Tensor> row;
    const auto tiles = traversal_tiles(ck.bundle, image, plan);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      const auto nc = latentnav::nearest_class(tiles[t].image, ref.features, ref.labels);
      table << p << ',' << t << ",\"" << tiles[t].prefix.to_string() << "\"," << nc.label << ','
            << format_double(nc.mse) << ',' << pool[nc.index] << '\n';
      row.push_back(tiles[t].image);
    }
    grid.push_back(std::move(row));
  }
  write_file_atomic(out, pgm_grid(grid, data.image_rows, data.image_cols));
  if (csv.empty()) csv = fs::path(out).replace_extension(".csv").string();
  write_file_atomic(csv, table.str());
  return kExitOk;
}

int cmd_hypothetical(const std::string& ckpt, const std::string& spec, const std::string& covariate,
                     double delta, const std::string& report) {
  const trainer::Checkpoint ck = trainer::load_checkpoint(ckpt);
  const LoadedSpec s = spec_for(ck, spec);
  const Dataset data = scaled_for(ck, load_dataset(s.plan, s.base_dir));
  if (!data.covariates.find(covariate)) {
    fail(ErrorKind::kUnknownCovariate, "unknown covariate '" + covariate + "'");
  }
  write_file_atomic(report, with_newline(hypothetical_report(ck.bundle, data, covariate, delta)));
  return kExitOk;
}

int cmd_pairs(const std::string& spec, const std::string& dump, const std::string& seed) {
  LoadedSpec s = load_spec(spec);
  apply_seed(s.plan, seed);
  const Dataset data = load_dataset(s.plan, s.base_dir);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<pairing::PairSet> sets;
  for (const auto& c : data.covariates.columns) {
    sets.push_back(pairing::enumerate_pairs(data.covariates, data.labels, c.spec.name,
                                            pairing::PairOptions::from_spec(c.spec, s.plan.train.max_pairs),
                                            rows, derive_seed(s.plan.train.seed, "dump")));
    std::cout << c.spec.name << ": " << sets.back().size() << " pairs\n";
  }
  write_file_atomic(dump, pairing::pairs_csv(sets));
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, double tolerance) {
  bool ok = true;
  std::cout << "op,max_rel_error,status\n";
  for (const OpCheck& c : grad_check_suite(seed, tolerance)) {
    std::cout << c.op << ',' << c.max_rel_error << ',' << (c.pass ? "pass" : "FAIL") << '\n';
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitNumeric;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNonFinite: return kExitNumeric;
    case ErrorKind::kHashMismatch: return kExitUsage;
    default: return kExitData;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"catharm: invariant and equivariant representation learning experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string spec, out, seed, ckpt, report, covariate, dump, csv;
  std::size_t threads = 1, index = 0;
  bool force = false;
  double delta = 0.0, tolerance = 1e-5;
  std::uint64_t check_seed = 0;
  std::vector<std::string> plans;

  auto* train = app.add_subcommand("train", "Train (and cross-validate) the experiment of a spec");
  train->add_option("--spec", spec, "Experiment spec (.cat)")->required();
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--seed", seed, "Seed (overrides CATHARM_SEED and the spec file)");
  train->add_option("--threads", threads, "Workers for cross-validation folds")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Recompute the report of a checkpoint");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--spec", spec, "Spec (default: the copy stored in the checkpoint)");
  eval->add_option("--report", report, "Report path")->required();
  eval->add_flag("--force", force, "Proceed when the spec file hash differs from the checkpoint");
  eval->add_option("--threads", threads, "Workers for cross-validation folds")->check(CLI::PositiveNumber);

  auto* traverse = app.add_subcommand("traverse", "Render latent traversals of one image");
  traverse->add_option("--ckpt", ckpt, "Checkpoint")->required();
  traverse->add_option("--spec", spec, "Spec (default: stored copy)");
  traverse->add_option("--index", index, "Dataset row of the source image")->required();
  traverse->add_option("--plan", plans, "Plan like \"digit:-4\" or \"rotate:2,scale:3\"; repeatable")->required();
  traverse->add_option("--out", out, "PGM grid path")->required();
  traverse->add_option("--csv", csv, "Nearest-class table (default: next to the grid)");

  auto* hyp = app.add_subcommand("hypothetical", "Class probabilities after moving samples by a morphism");
  hyp->add_option("--ckpt", ckpt, "Checkpoint")->required();
  hyp->add_option("--spec", spec, "Spec (default: stored copy)");
  hyp->add_option("--covariate", covariate, "Covariate with a morphism")->required();
  hyp->add_option("--delta", delta, "Power of the morphism")->required();
  hyp->add_option("--report", report, "JSON output path")->required();

  auto* pairs = app.add_subcommand("pairs", "Dump the pairs of every covariate over the whole dataset");
  pairs->add_option("--spec", spec, "Experiment spec")->required();
  pairs->add_option("--dump", dump, "CSV output path")->required();
  pairs->add_option("--seed", seed, "Seed (overrides CATHARM_SEED and the spec file)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every op");
  grad->add_option("--seed", check_seed, "Seed");
  grad->add_option("--tolerance", tolerance, "Relative error bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_log_quiet(quiet);
  try {
    if (*train) return cmd_train(spec, out, seed, threads);
    if (*eval) return cmd_eval(ckpt, spec, report, force, threads);
    if (*traverse) return cmd_traverse(ckpt, spec, index, plans, out, csv);
    if (*hyp) return cmd_hypothetical(ckpt, spec, covariate, delta, report);
    if (*pairs) return cmd_pairs(spec, dump, seed);
    if (*grad) return cmd_gradcheck(check_seed, tolerance);
  } catch (const SpecFailure& f) {
    for (const auto& l : f.lines) std::cerr << l << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace catharm::cli
