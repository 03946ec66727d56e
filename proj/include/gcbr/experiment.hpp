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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gcbr/baselines.hpp"
#include "gcbr/env.hpp"
#include "gcbr/graph.hpp"
#include "gcbr/policy.hpp"

namespace gcbr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a graph comes from (a file, or a generated SBM) and how it is split.
struct GraphSource {
  std::string path;  // empty: generate from `sbm`
  SbmConfig sbm;
  std::uint64_t graph_seed = 1;
  int valid_size = 100;
  int test_size = 100;
  std::uint64_t split_seed = 11;

  Graph load() const;
};

struct ExperimentConfig {
  GraphSource source;  // fully labeled graph the policy is trained on
  GraphSource target;  // graph the frozen policy is evaluated on
  RewardConfig reward;
  ClassifierConfig classifier;
  TrainConfig train;
  int test_budget = 0;  // 0 means 20 x num_classes
  int eval_seeds = 50;
  std::uint64_t seed = 0;
  FeatureMask dropped;
  double pagerank_damping = 0.85;
  std::filesystem::path out_dir = "out";
  int workers = 1;

  ExperimentConfig();

  int resolve_test_budget(int num_classes) const { return test_budget > 0 ? test_budget : 20 * num_classes; }
  std::vector<StateFeature> columns() const { return state_columns(reward.variant, dropped); }
  /// Seeds of the evaluation runs, derived from the master seed.
  std::vector<std::uint64_t> evaluation_seeds() const;
  /// TrainConfig with its seed derived from the master seed.
  TrainConfig train_config() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  std::string to_ini() const;
  static ExperimentConfig from_ini(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& file);
};

using ProgressFn = std::function<void(const std::string&)>;

struct TrainOutput {
  TrainResult result;
  std::filesystem::path checkpoint;
};

/// Trains on the source graph; writes policy.json, train_log.csv, config.ini.
TrainOutput cmd_train(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Evaluates a checkpoint on the target graph; writes metrics.csv, trace.csv.
EvaluationResult cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                              const ProgressFn& progress = {});

/// Runs a baseline on the target graph; writes metrics.csv, trace.csv.
EvaluationResult cmd_baseline(const ExperimentConfig& cfg, BaselineKind kind, const ProgressFn& progress = {});

enum class SweepAxis { TestBudget, Alpha, Eta, TrainBudget };

std::string_view axis_name(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

struct SweepPoint {
  double value = 0.0;
  std::vector<EvaluationResult> methods;
};

/// One group per value; writes sweep.csv and charts/sweep_<axis>_<metric>.svg.
std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                                  const ProgressFn& progress = {});

struct AblationRow {
  std::string method;
  std::string removed;  // empty for the full feature set
  EvaluationResult result;
};

/// Full feature set plus one removal per feature; writes ablation.csv.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Materializes the graph described by `src` at `out`.
/// A `.json` destination gets a bundle, anything else an edge-list directory.
void cmd_gen_sbm(const GraphSource& src, const std::filesystem::path& out);

}  // namespace gcbr
