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

#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "gcbr/experiment.hpp"
#include "gcbr/report.hpp"

using namespace gcbr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gcbr_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Small source and target SBMs with a one-episode training run.
ExperimentConfig smoke_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.source.sbm.num_nodes = 300;
  cfg.source.valid_size = 60;
  cfg.source.test_size = 60;
  cfg.target.sbm.num_nodes = 300;
  cfg.target.valid_size = 60;
  cfg.target.test_size = 60;
  cfg.train.max_episodes = 1;
  cfg.test_budget = 35;
  cfg.eval_seeds = 3;
  cfg.classifier.max_epochs = 50;
  cfg.out_dir = scratch(name);
  cfg.workers = 2;
  return cfg;
}

std::string config_error(const std::string& ini) {
  try {
    ExperimentConfig::from_ini(ini);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round-trips through ini text") {
  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.reward.variant = RewardVariant::GcbrPlusPlus;
  cfg.reward.alpha = 0.25;
  cfg.reward.eta = 0.3;
  cfg.target.sbm.class_proportions = {0.5, 0.3, 0.2};
  cfg.train.budget = 21;
  cfg.dropped.set(static_cast<std::size_t>(StateFeature::Selectivity));
  cfg.test_budget = 0;
  const std::string text = cfg.to_ini();
  const ExperimentConfig back = ExperimentConfig::from_ini(text);
  CHECK(back.to_ini() == text);
  CHECK(back.seed == 42);
  CHECK(back.reward.variant == RewardVariant::GcbrPlusPlus);
  CHECK(back.reward.alpha == 0.25);
  CHECK(back.target.sbm.class_proportions == std::vector<double>{0.5, 0.3, 0.2});
  CHECK(back.dropped == cfg.dropped);
  CHECK(back.resolve_test_budget(5) == 100);
}

TEST_CASE("training and evaluation defaults") {
  const ExperimentConfig cfg;
  CHECK(cfg.train.budget == 35);
  CHECK(cfg.train.update_freq == 7);
  CHECK(cfg.train.gamma == 0.99);
  CHECK(cfg.train.parallel_episodes == 5);
  CHECK(cfg.reward.alpha == 0.5);
  CHECK(cfg.eval_seeds == 50);
  CHECK(cfg.target.sbm.class_proportions == std::vector<double>{0.6, 0.2, 0.1, 0.06, 0.04});
  CHECK(cfg.target.sbm.num_nodes == 1000);
}

TEST_CASE("bad configs name the offending field") {
  CHECK(config_error("[policy]\nbudjet = 35\n").find("policy.budjet") != std::string::npos);
  CHECK(config_error("[reward]\nalpha = 1.5\n").find("reward.alpha") != std::string::npos);
  CHECK(config_error("[reward]\nvariant = gcbr+++\n").find("reward.variant") != std::string::npos);
  CHECK(config_error("[target]\nnum_nodes = lots\n").find("target.num_nodes") != std::string::npos);
  CHECK(config_error("[policy]\nbudget = 36\nupdate_freq = 7\n").find("B must be a multiple of F") !=
        std::string::npos);
  CHECK(config_error("[ablation]\ndrop = pagerank\n").find("ablation.drop") != std::string::npos);
  CHECK(config_error("").empty());
}

TEST_CASE("one-episode smoke run, then evaluation") {
  ExperimentConfig cfg = smoke_config("smoke");
  const auto start = std::chrono::steady_clock::now();
  const TrainOutput trained = cmd_train(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 60.0);
  CHECK(fs::exists(cfg.out_dir / "policy.json"));
  CHECK(fs::exists(cfg.out_dir / "train_log.csv"));
  CHECK(fs::exists(cfg.out_dir / "config.ini"));
  CHECK(Policy::load(trained.checkpoint).state_dim() == 5);
  CHECK(ExperimentConfig::load(cfg.out_dir / "config.ini").to_ini() == cfg.to_ini());

  const EvaluationResult r = cmd_evaluate(cfg, trained.checkpoint);
  CHECK(r.runs.size() == 3);
  const CsvTable metrics = read_csv(cfg.out_dir / "metrics.csv");
  REQUIRE(metrics.rows.size() == 4);
  CHECK(metrics.rows.back()[metrics.column("seed")] == "summary");
  const std::string first = slurp(cfg.out_dir / "metrics.csv");
  const std::string first_trace = slurp(cfg.out_dir / "trace.csv");
  CHECK(read_csv(cfg.out_dir / "trace.csv").rows.size() == 3 * 35);

  cmd_evaluate(cfg, trained.checkpoint);
  CHECK(slurp(cfg.out_dir / "metrics.csv") == first);
  CHECK(slurp(cfg.out_dir / "trace.csv") == first_trace);

  ExperimentConfig plus = cfg;
  plus.reward.variant = RewardVariant::GcbrPlusPlus;
  CHECK_THROWS_AS(cmd_evaluate(plus, trained.checkpoint), EnvError);
}

TEST_CASE("baseline command writes the shared metrics layout") {
  ExperimentConfig cfg = smoke_config("baseline");
  const auto r = cmd_baseline(cfg, BaselineKind::MaxEntropy);
  CHECK(r.runs.size() == 3);
  const CsvTable metrics = read_csv(cfg.out_dir / "metrics.csv");
  std::string header;
  for (const auto& h : metrics.header) header += (header.empty() ? "" : ",") + h;
  CHECK(header == kMetricsHeader);
  CHECK(metrics.rows.front()[0] == "max_entropy");
}

TEST_CASE("alpha sweep gives one group per value and charts") {
  ExperimentConfig cfg = smoke_config("sweep_alpha");
  cfg.eval_seeds = 2;
  const auto points = cmd_sweep(cfg, SweepAxis::Alpha, {1.0, 0.0, 0.5, 0.5});
  REQUIRE(points.size() == 3);
  CHECK(points[0].value == 0.0);
  CHECK(points[2].value == 1.0);
  const CsvTable sweep = read_csv(cfg.out_dir / "sweep.csv");
  CHECK(sweep.rows.size() == 3 * 2);
  std::size_t charts = 0;
  for (const auto& entry : fs::directory_iterator(cfg.out_dir / "charts")) {
    CHECK(entry.path().extension() == ".svg");
    CHECK(slurp(entry.path()).rfind("<svg", 0) == 0);
    ++charts;
  }
  CHECK(charts >= 3);
}

TEST_CASE("random baseline improves with the test budget on a separable SBM") {
  ExperimentConfig cfg = smoke_config("sweep_budget");
  cfg.target.sbm.feature_signal = 3.0;
  cfg.eval_seeds = 6;
  const auto points = cmd_sweep(cfg, SweepAxis::TestBudget, {25, 50, 100});
  REQUIRE(points.size() == 3);
  double prev = 0.0;
  for (const auto& p : points) {
    const auto it = std::find_if(p.methods.begin(), p.methods.end(), [](const auto& m) { return m.method == "random"; });
    REQUIRE(it != p.methods.end());
    CHECK(it->micro_f1().mean >= prev);
    prev = it->micro_f1().mean;
  }
}

TEST_CASE("ablation table has the full row plus one row per feature") {
  ExperimentConfig cfg = smoke_config("ablate");
  cfg.eval_seeds = 2;
  const auto rows = cmd_ablate(cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].method == "GCBR");
  CHECK(rows[0].removed.empty());
  const auto no_sel = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.method == "NoSelec"; });
  REQUIRE(no_sel != rows.end());
  for (const auto& run : no_sel->result.runs) CHECK(static_cast<int>(run.trace.size()) == 35);
  CHECK(read_csv(cfg.out_dir / "ablation.csv").rows.size() == 6);
}

TEST_CASE("generated SBMs load back identically") {
  const fs::path dir = scratch("gen");
  GraphSource src;
  src.sbm.num_nodes = 200;
  cmd_gen_sbm(src, dir / "g.json");
  cmd_gen_sbm(src, dir / "edges");
  const Graph a = src.load();
  for (const fs::path p : {dir / "g.json", dir / "edges"}) {
    GraphSource from_file = src;
    from_file.path = p.string();
    const Graph b = from_file.load();
    CHECK(b.num_nodes() == a.num_nodes());
    CHECK(b.labels() == a.labels());
    CHECK(b.features() == a.features());
  }
}
