// Copyright 2026 The GCBR Authors.
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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gcbr/experiment.hpp"
#include "gcbr/report.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI experiment config (defaults when omitted)");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

gcbr::ExperimentConfig resolve(const Common& c) {
  gcbr::ExperimentConfig cfg = c.config.empty() ? gcbr::ExperimentConfig{} : gcbr::ExperimentConfig::load(c.config);
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  return cfg;
}

void progress(const std::string& msg) { std::cerr << msg << '\n'; }

void print_summary(const gcbr::EvaluationResult& r) {
  const auto mi = r.micro_f1(), ma = r.macro_f1(), ib = r.imbalance_ratio();
  std::cout << r.method << ": micro_f1 " << mi.mean << " +- " << mi.stddev << ", macro_f1 " << ma.mean << " +- "
            << ma.stddev << ", imbalance_ratio " << ib.mean << " +- " << ib.stddev << '\n';
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gcbr::ConfigError("--values: invalid number '" + item + "'");
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-balanced reinforced active learning on graphs"};
  app.require_subcommand(1);

  Common train_opts, eval_opts, base_opts, sweep_opts, ablate_opts, gen_opts;

  auto* train = app.add_subcommand("train", "train a selection policy on the source graph");
  add_common(train, train_opts);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a policy checkpoint on the target graph");
  add_common(evaluate, eval_opts);
  std::string checkpoint;
  evaluate->add_option("--checkpoint", checkpoint, "policy.json to evaluate")->required();

  auto* baseline = app.add_subcommand("baseline", "run a baseline selector on the target graph");
  add_common(baseline, base_opts);
  std::string method = "random";
  baseline->add_option("--method", method, "random or max_entropy");

  auto* sweep = app.add_subcommand("sweep", "sweep one hyperparameter");
  add_common(sweep, sweep_opts);
  std::string axis, values;
  sweep->add_option("--axis", axis, "test_budget, alpha, eta or train_budget")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  auto* ablate = app.add_subcommand("ablate", "train and evaluate with each state feature removed");
  add_common(ablate, ablate_opts);

  auto* gen = app.add_subcommand("gen-sbm", "write the configured SBM to disk");
  add_common(gen, gen_opts);
  std::string which = "target";
  gen->add_option("--graph", which, "source or target")->check(CLI::IsMember({"source", "target"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto out = gcbr::cmd_train(resolve(train_opts), progress);
      std::cout << "checkpoint " << out.checkpoint.string() << " (" << out.result.updates << " updates)\n";
    } else if (evaluate->parsed()) {
      print_summary(gcbr::cmd_evaluate(resolve(eval_opts), checkpoint, progress));
    } else if (baseline->parsed()) {
      const auto cfg = resolve(base_opts);
      gcbr::BaselineKind kind;
      try {
        kind = gcbr::parse_baseline(method);
      } catch (const std::invalid_argument& e) {
        throw gcbr::ConfigError(std::string("--method: ") + e.what());
      }
      print_summary(gcbr::cmd_baseline(cfg, kind, progress));
    } else if (sweep->parsed()) {
      const auto cfg = resolve(sweep_opts);
      const auto points = gcbr::cmd_sweep(cfg, gcbr::parse_axis(axis), parse_values(values), progress);
      for (const auto& p : points) {
        std::cout << axis << " = " << p.value << '\n';
        for (const auto& m : p.methods) print_summary(m);
      }
    } else if (ablate->parsed()) {
      for (const auto& row : gcbr::cmd_ablate(resolve(ablate_opts), progress)) print_summary(row.result);
    } else if (gen->parsed()) {
      const auto cfg = resolve(gen_opts);
      const gcbr::GraphSource& src = which == "source" ? cfg.source : cfg.target;
      const std::filesystem::path dest = gen_opts.out.empty() ? std::filesystem::path("sbm") : cfg.out_dir;
      gcbr::cmd_gen_sbm(src, dest);
      std::cout << "wrote " << dest.string() << '\n';
    }
  } catch (const gcbr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
