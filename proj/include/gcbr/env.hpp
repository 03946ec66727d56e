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

#include <array>
#include <bitset>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcbr/graph.hpp"
#include "gcbr/nn.hpp"

namespace gcbr {

enum class RewardVariant { Gcbr, GcbrPlusPlus };

std::string_view variant_name(RewardVariant v);
RewardVariant parse_variant(std::string_view name);

struct RewardConfig {
  double alpha = 0.5;
  double eta = 0.05;
  RewardVariant variant = RewardVariant::Gcbr;

  void validate() const;
  /// Penalty magnitude actually applied; always zero for plain GCBR.
  double effective_eta() const { return variant == RewardVariant::GcbrPlusPlus ? eta : 0.0; }
  /// alpha * gain + (1 - alpha) * diversity - penalty.
  double compose(double gain, double diversity, double penalty) const {
    return alpha * gain + (1.0 - alpha) * diversity - penalty;
  }
};

// ---------------------------------------------------------------------------
// State features

enum class StateFeature : int {
  Centrality = 0,
  Uncertainty = 1,
  ClassDiversity = 2,
  Selectivity = 3,
  CriteriaSimilarity = 4,
  MajorityScore = 5,
};

inline constexpr std::array<StateFeature, 6> kAllFeatures{
    StateFeature::Centrality,  StateFeature::Uncertainty,        StateFeature::ClassDiversity,
    StateFeature::Selectivity, StateFeature::CriteriaSimilarity, StateFeature::MajorityScore};

std::string_view feature_name(StateFeature f);
StateFeature parse_feature(std::string_view name);

/// Set of features removed from the policy input.
using FeatureMask = std::bitset<kAllFeatures.size()>;

/// Column layout for a variant: the five base features, plus the majority
/// score for GCBR++, minus anything in `dropped`.
std::vector<StateFeature> state_columns(RewardVariant variant, const FeatureMask& dropped = {});

struct StateMatrix {
  DenseMatrix values;                 // num_nodes x columns.size()
  std::vector<StateFeature> columns;
};

/// Normalized prediction entropy per row, in [0, 1]. All zeros when m == 1.
Vector feature_uncertainty(const DenseMatrix& predictions, int num_classes);

/// Predictions with labeled rows replaced by their one-hot ground truth.
DenseMatrix mixed_predictions(const DenseMatrix& predictions, const std::vector<int>& labeled_set,
                              const std::vector<int>& labels);

/// Per row: sum_i p(i) / max(1, C_i).
Vector feature_class_diversity(const DenseMatrix& mixed, const std::vector<int>& class_counts);

Vector feature_selectivity(const std::vector<int>& labeled_set, int num_nodes);

/// Per row: Euclidean distance to the nearest labeled row of `criteria`.
/// All zeros when nothing is labeled.
Vector feature_criteria_similarity(const DenseMatrix& criteria, const std::vector<int>& labeled_set);

/// Classes whose count reaches budget / m, in increasing order.
std::vector<int> majority_class_set(const std::vector<int>& class_counts, int budget, int num_classes);

/// Per row: probability mass on the majority classes.
Vector feature_majority_score(const DenseMatrix& mixed, const std::vector<int>& major_set);

/// In-place per-column min-max scaling to [0, 1]; constant columns become 0.
void normalize_columns(DenseMatrix& m);

// ---------------------------------------------------------------------------
// Environment

struct ClassifierConfig {
  int hidden = 64;
  double lr = 0.01;
  int max_epochs = 200;
  int patience = 20;
};

struct Classifier {
  GcnParams<double> params;
  AdamState<double> optimizer;
};

/// Mutable state of one active-learning episode.
struct EnvState {
  int step_t = 0;
  std::vector<int> labeled_set;
  std::vector<int> class_counts;
  std::vector<std::uint8_t> labeled_mask;
  Classifier classifier;
  DenseMatrix prev_predictions;
  double prev_valid_macro_f1 = 0.0;
  int budget = 0;
  RewardConfig reward_cfg;
  GcnForward<double> last_forward;

  bool done() const { return step_t >= budget; }
};

/// One row of the episode trace.
struct StepResult {
  int step = 0;
  int node = -1;
  int true_class = -1;
  double gain = 0.0;
  double diversity = 0.0;
  double penalty = 0.0;
  double reward = 0.0;
  double valid_macro_f1 = 0.0;
  double imbalance_ratio = 0.0;
};

struct FinalMetrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double imbalance_ratio = 0.0;
  double best_valid_macro_f1 = 0.0;
  int epochs_trained = 0;
};

class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Read-only per-graph context: the graph, its split, the normalized
/// adjacency, propagated node features and cached PageRank. Safe to share
/// across concurrent episodes.
class Environment {
 public:
  Environment(const Graph& graph, DataSplit split, ClassifierConfig classifier = {},
              double pagerank_damping = 0.85);

  const Graph& graph() const { return *graph_; }
  const DataSplit& split() const { return split_; }
  const SparseMatrix& norm_adj() const { return norm_adj_; }
  const Vector& centrality() const { return centrality_; }
  const ClassifierConfig& classifier_config() const { return classifier_cfg_; }
  bool in_train(int v) const { return train_mask_[static_cast<std::size_t>(v)] != 0; }

  EnvState reset(const RewardConfig& cfg, int budget, std::uint64_t seed) const;

  /// Labels `node`, trains the classifier for one full-batch epoch and returns
  /// the reward breakdown. Throws EnvError for invalid actions.
  StepResult step(EnvState& state, int node) const;

  StateMatrix build_state(const EnvState& state, const std::vector<StateFeature>& columns) const;

  /// 1 for unlabeled train nodes.
  std::vector<std::uint8_t> valid_actions(const EnvState& state) const;
  std::vector<int> unlabeled_pool(const EnvState& state) const;

  /// Trains to convergence with early stopping on validation Macro-F1 and
  /// reports test metrics of the best checkpoint.
  FinalMetrics finalize(EnvState& state, int max_epochs, int patience) const;
  FinalMetrics finalize(EnvState& state) const {
    return finalize(state, classifier_cfg_.max_epochs, classifier_cfg_.patience);
  }

  double macro_f1_on(const DenseMatrix& predictions, const std::vector<int>& index_set) const;

 private:
  void train_epoch(EnvState& state) const;
  GcnForward<double> forward(const GcnParams<double>& params) const;

  const Graph* graph_;
  DataSplit split_;
  ClassifierConfig classifier_cfg_;
  SparseMatrix norm_adj_;
  DenseMatrix propagated_features_;
  Vector centrality_;
  std::vector<std::uint8_t> train_mask_;
};

// ---------------------------------------------------------------------------
// Shared evaluation protocol

/// Chooses the next node given the current episode state.
using Selector = std::function<int(const Environment&, const EnvState&)>;

struct RunMetrics {
  std::uint64_t seed = 0;
  FinalMetrics final;
  std::vector<int> selection_histogram;
  std::vector<StepResult> trace;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double sem() const;
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& xs);

/// Per-seed runs of one selection method plus their summary.
struct EvaluationResult {
  std::string method;
  std::vector<RunMetrics> runs;

  MeanStd micro_f1() const;
  MeanStd macro_f1() const;
  MeanStd imbalance_ratio() const;
};

/// Runs one episode of `budget` selections followed by finalize.
RunMetrics run_selection_episode(const Environment& env, const RewardConfig& cfg, int budget,
                                 std::uint64_t seed, const Selector& select);

}  // namespace gcbr
