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

#include "gcbr/env.hpp"

#include <algorithm>
#include <cmath>

#include "gcbr/metrics.hpp"

namespace gcbr {

std::string_view variant_name(RewardVariant v) {
  return v == RewardVariant::GcbrPlusPlus ? "gcbr++" : "gcbr";
}

RewardVariant parse_variant(std::string_view name) {
  if (name == "gcbr" || name == "GCBR") return RewardVariant::Gcbr;
  if (name == "gcbr++" || name == "GCBR++" || name == "gcbrpp") return RewardVariant::GcbrPlusPlus;
  throw std::invalid_argument("unknown reward variant '" + std::string(name) + "'");
}

void RewardConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
}

std::string_view feature_name(StateFeature f) {
  switch (f) {
    case StateFeature::Centrality: return "centrality";
    case StateFeature::Uncertainty: return "uncertainty";
    case StateFeature::ClassDiversity: return "class_diversity";
    case StateFeature::Selectivity: return "selectivity";
    case StateFeature::CriteriaSimilarity: return "criteria_similarity";
    case StateFeature::MajorityScore: return "majority_score";
  }
  return "?";
}

StateFeature parse_feature(std::string_view name) {
  for (StateFeature f : kAllFeatures) {
    if (feature_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown state feature '" + std::string(name) + "'");
}

std::vector<StateFeature> state_columns(RewardVariant variant, const FeatureMask& dropped) {
  std::vector<StateFeature> cols;
  for (StateFeature f : kAllFeatures) {
    if (f == StateFeature::MajorityScore && variant != RewardVariant::GcbrPlusPlus) continue;
    if (dropped.test(static_cast<std::size_t>(f))) continue;
    cols.push_back(f);
  }
  return cols;
}

// ---------------------------------------------------------------------------
// Features

Vector feature_uncertainty(const DenseMatrix& predictions, int num_classes) {
  Vector out = Vector::Zero(predictions.rows());
  if (num_classes <= 1) return out;
  const double log_m = std::log(static_cast<double>(num_classes));
  for (Eigen::Index v = 0; v < predictions.rows(); ++v) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < predictions.cols(); ++i) {
      const double p = predictions(v, i);
      if (p > 0.0) h -= p * std::log(p);
    }
    out(v) = h / log_m;
  }
  return out;
}

DenseMatrix mixed_predictions(const DenseMatrix& predictions, const std::vector<int>& labeled_set,
                              const std::vector<int>& labels) {
  DenseMatrix mixed = predictions;
  for (int v : labeled_set) {
    mixed.row(v).setZero();
    mixed(v, labels[static_cast<std::size_t>(v)]) = 1.0;
  }
  return mixed;
}

Vector feature_class_diversity(const DenseMatrix& mixed, const std::vector<int>& class_counts) {
  Vector out(mixed.rows());
  for (Eigen::Index v = 0; v < mixed.rows(); ++v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mixed.cols(); ++i) {
      s += mixed(v, i) / std::max(1, class_counts[static_cast<std::size_t>(i)]);
    }
    out(v) = s;
  }
  return out;
}

Vector feature_selectivity(const std::vector<int>& labeled_set, int num_nodes) {
  Vector out = Vector::Zero(num_nodes);
  for (int v : labeled_set) out(v) = 1.0;
  return out;
}

Vector feature_criteria_similarity(const DenseMatrix& criteria, const std::vector<int>& labeled_set) {
  Vector out = Vector::Zero(criteria.rows());
  if (labeled_set.empty()) return out;
  for (Eigen::Index v = 0; v < criteria.rows(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (int u : labeled_set) {
      double sq = 0.0;
      for (Eigen::Index k = 0; k < criteria.cols(); ++k) {
        const double d = criteria(v, k) - criteria(u, k);
        sq += d * d;
      }
      best = std::min(best, std::sqrt(sq));
    }
    out(v) = best;
  }
  return out;
}

std::vector<int> majority_class_set(const std::vector<int>& class_counts, int budget, int num_classes) {
  std::vector<int> major;
  for (int i = 0; i < num_classes; ++i) {
    // C_i >= B / m, compared exactly in integers.
    const auto lhs = static_cast<std::int64_t>(class_counts[static_cast<std::size_t>(i)]) * num_classes;
    if (lhs >= budget) major.push_back(i);
  }
  return major;
}

Vector feature_majority_score(const DenseMatrix& mixed, const std::vector<int>& major_set) {
  Vector out = Vector::Zero(mixed.rows());
  for (Eigen::Index v = 0; v < mixed.rows(); ++v) {
    double s = 0.0;
    for (int i : major_set) s += mixed(v, i);
    out(v) = s;
  }
  return out;
}

void normalize_columns(DenseMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double lo = m.col(j).minCoeff();
    const double hi = m.col(j).maxCoeff();
    if (hi > lo) {
      m.col(j) = (m.col(j).array() - lo) / (hi - lo);
    } else {
      m.col(j).setZero();
    }
  }
}

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(const Graph& graph, DataSplit split, ClassifierConfig classifier,
                         double pagerank_damping)
    : graph_(&graph), split_(std::move(split)), classifier_cfg_(classifier) {
  if (graph.num_classes() < 2) throw EnvError("environment requires at least two classes");
  const int n = graph.num_nodes();
  train_mask_.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  for (const auto* set : {&split_.train_idx, &split_.valid_idx, &split_.test_idx}) {
    if (set->empty()) throw EnvError("split sets must be non-empty");
    for (int v : *set) {
      if (v < 0 || v >= n) throw EnvError("split index " + std::to_string(v) + " out of range");
      if (seen[static_cast<std::size_t>(v)]++) throw EnvError("split sets overlap at node " + std::to_string(v));
    }
  }
  for (int v : split_.train_idx) train_mask_[static_cast<std::size_t>(v)] = 1;
  norm_adj_ = normalized_adjacency(graph);
  propagated_features_ = norm_adj_ * graph.features();
  // Computed once per graph, so iterate well past the default tolerance.
  centrality_ = pagerank(graph, pagerank_damping, 1e-13, 2000).scores;
}

GcnForward<double> Environment::forward(const GcnParams<double>& params) const {
  return gcn_forward_propagated<double>(norm_adj_, propagated_features_, params, Activation::SoftmaxRows);
}

double Environment::macro_f1_on(const DenseMatrix& predictions, const std::vector<int>& index_set) const {
  return macro_f1(argmax_rows(predictions), graph_->labels(), index_set, graph_->num_classes());
}

EnvState Environment::reset(const RewardConfig& cfg, int budget, std::uint64_t seed) const {
  cfg.validate();
  if (budget <= 0) throw EnvError("budget must be positive");
  if (budget > static_cast<int>(split_.train_idx.size())) {
    throw EnvError("budget " + std::to_string(budget) + " exceeds the train pool of " +
                   std::to_string(split_.train_idx.size()) + " nodes");
  }
  EnvState s;
  s.budget = budget;
  s.reward_cfg = cfg;
  s.class_counts.assign(static_cast<std::size_t>(graph_->num_classes()), 0);
  s.labeled_mask.assign(static_cast<std::size_t>(graph_->num_nodes()), 0);
  Rng rng(seed);
  s.classifier.params =
      init_gcn<double>(graph_->feature_dim(), classifier_cfg_.hidden, graph_->num_classes(), false, rng);
  s.classifier.optimizer = AdamState<double>::for_params(s.classifier.params);
  s.last_forward = forward(s.classifier.params);
  s.prev_predictions = s.last_forward.output;
  s.prev_valid_macro_f1 = macro_f1_on(s.prev_predictions, split_.valid_idx);
  return s;
}

void Environment::train_epoch(EnvState& s) const {
  // The cached forward pass corresponds to the current parameters.
  const auto loss = softmax_cross_entropy<double>(s.last_forward.logits, graph_->labels(), s.labeled_set);
  // Softmax and cross-entropy are fused, so the gradient is taken w.r.t. logits.
  s.last_forward.activation = Activation::None;
  const auto grads = gcn_backward<double>(norm_adj_, s.last_forward, s.classifier.params, loss.grad);
  adam_step<double>(s.classifier.params, grads, s.classifier.optimizer, classifier_cfg_.lr);
  s.last_forward = forward(s.classifier.params);
}

StepResult Environment::step(EnvState& s, int node) const {
  if (s.done()) throw EnvError("budget exhausted");
  if (node < 0 || node >= graph_->num_nodes() || !in_train(node)) {
    throw EnvError("node " + std::to_string(node) + " is not in the train pool");
  }
  if (s.labeled_mask[static_cast<std::size_t>(node)]) {
    throw EnvError("node " + std::to_string(node) + " is already labeled");
  }
  const int m = graph_->num_classes();
  const int c = graph_->label(node);
  const int prior = s.class_counts[static_cast<std::size_t>(c)];

  StepResult r;
  r.node = node;
  r.true_class = c;
  r.diversity = 1.0 / std::max(1, prior);
  const bool in_major = static_cast<std::int64_t>(prior) * m >= s.budget;
  r.penalty = in_major ? s.reward_cfg.effective_eta() : 0.0;

  s.labeled_set.push_back(node);
  s.labeled_mask[static_cast<std::size_t>(node)] = 1;
  ++s.class_counts[static_cast<std::size_t>(c)];
  ++s.step_t;

  train_epoch(s);
  s.prev_predictions = s.last_forward.output;
  const double f1 = macro_f1_on(s.prev_predictions, split_.valid_idx);

  r.step = s.step_t;
  r.gain = f1 - s.prev_valid_macro_f1;
  r.reward = s.reward_cfg.compose(r.gain, r.diversity, r.penalty);
  r.valid_macro_f1 = f1;
  r.imbalance_ratio = imbalance_ratio(s.class_counts);
  s.prev_valid_macro_f1 = f1;
  return r;
}

StateMatrix Environment::build_state(const EnvState& s, const std::vector<StateFeature>& columns) const {
  const int n = graph_->num_nodes();
  const int m = graph_->num_classes();
  const DenseMatrix mixed = mixed_predictions(s.prev_predictions, s.labeled_set, graph_->labels());

  DenseMatrix all(n, static_cast<Eigen::Index>(kAllFeatures.size()));
  all.col(0) = centrality_;
  all.col(1) = feature_uncertainty(s.prev_predictions, m);
  all.col(2) = feature_class_diversity(mixed, s.class_counts);
  all.col(3) = feature_selectivity(s.labeled_set, n);
  DenseMatrix criteria = all.leftCols(4);
  normalize_columns(criteria);
  all.col(4) = feature_criteria_similarity(criteria, s.labeled_set);
  all.col(5) = feature_majority_score(mixed, majority_class_set(s.class_counts, s.budget, m));
  all.leftCols(4) = criteria;
  normalize_columns(all);

  StateMatrix out;
  out.columns = columns;
  out.values.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = all.col(static_cast<int>(columns[j]));
  }
  return out;
}

std::vector<std::uint8_t> Environment::valid_actions(const EnvState& s) const {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(graph_->num_nodes()), 0);
  for (int v : split_.train_idx) mask[static_cast<std::size_t>(v)] = !s.labeled_mask[static_cast<std::size_t>(v)];
  return mask;
}

std::vector<int> Environment::unlabeled_pool(const EnvState& s) const {
  std::vector<int> pool;
  for (int v : split_.train_idx) {
    if (!s.labeled_mask[static_cast<std::size_t>(v)]) pool.push_back(v);
  }
  return pool;
}

FinalMetrics Environment::finalize(EnvState& s, int max_epochs, int patience) const {
  FinalMetrics out;
  GcnParams<double> best = s.classifier.params;
  double best_f1 = s.prev_valid_macro_f1;
  int stale = 0;
  if (!s.labeled_set.empty()) {
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
      train_epoch(s);
      ++out.epochs_trained;
      const double f1 = macro_f1_on(s.last_forward.output, split_.valid_idx);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = s.classifier.params;
        stale = 0;
      } else if (++stale > patience) {
        break;
      }
    }
  }
  s.classifier.params = best;
  s.last_forward = forward(best);
  s.prev_predictions = s.last_forward.output;
  s.prev_valid_macro_f1 = best_f1;

  const auto pred = argmax_rows(s.prev_predictions);
  out.micro_f1 = micro_f1(pred, graph_->labels(), split_.test_idx);
  out.macro_f1 = macro_f1(pred, graph_->labels(), split_.test_idx, graph_->num_classes());
  out.imbalance_ratio = imbalance_ratio(s.class_counts);
  out.best_valid_macro_f1 = best_f1;
  return out;
}

RunMetrics run_selection_episode(const Environment& env, const RewardConfig& cfg, int budget,
                                 std::uint64_t seed, const Selector& select) {
  RunMetrics run;
  run.seed = seed;
  EnvState s = env.reset(cfg, budget, seed);
  run.trace.reserve(static_cast<std::size_t>(budget));
  while (!s.done()) run.trace.push_back(env.step(s, select(env, s)));
  run.selection_histogram = s.class_counts;
  run.final = env.finalize(s);
  return run;
}

double MeanStd::sem() const { return n > 0 ? stddev / std::sqrt(static_cast<double>(n)) : 0.0; }

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return out;
}

namespace {
template <typename F>
MeanStd summarize(const std::vector<RunMetrics>& runs, F field) {
  std::vector<double> xs;
  xs.reserve(runs.size());
  for (const auto& r : runs) xs.push_back(field(r.final));
  return mean_std(xs);
}
}  // namespace

MeanStd EvaluationResult::micro_f1() const {
  return summarize(runs, [](const FinalMetrics& f) { return f.micro_f1; });
}
MeanStd EvaluationResult::macro_f1() const {
  return summarize(runs, [](const FinalMetrics& f) { return f.macro_f1; });
}
MeanStd EvaluationResult::imbalance_ratio() const {
  return summarize(runs, [](const FinalMetrics& f) { return f.imbalance_ratio; });
}

}  // namespace gcbr
