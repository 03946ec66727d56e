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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcbr/env.hpp"
#include "gcbr/nn.hpp"

namespace gcbr {

/// Actor (GCN + linear scoring head) and critic (GCN + mean pooling) with
/// their optimizer state. `features` fixes the state-matrix layout the policy
/// was trained on.
struct Policy {
  GcnParams<double> actor;
  GcnParams<double> critic;
  AdamState<double> actor_opt;
  AdamState<double> critic_opt;
  std::vector<StateFeature> features;
  RewardVariant variant = RewardVariant::Gcbr;

  int state_dim() const { return static_cast<int>(features.size()); }

  static Policy create(std::vector<StateFeature> features, RewardVariant variant, int hidden,
                       std::uint64_t seed);

  /// Throws EnvError unless `columns` and `variant` match the training setup.
  void check_compatible(const std::vector<StateFeature>& columns, RewardVariant variant) const;

  nlohmann::json to_json() const;
  static Policy from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& file) const;
  static Policy load(const std::filesystem::path& file);
};

struct ActorOutput {
  GcnForward<double> gcn;
  Vector scores;
};

ActorOutput actor_forward(const GcnParams<double>& actor, const SparseMatrix& norm_adj, const DenseMatrix& state);

/// Softmax restricted to entries with valid[i] != 0; invalid entries are
/// exactly 0. Throws when nothing is valid.
Vector masked_softmax(const Vector& scores, std::span<const std::uint8_t> valid);

Vector actor_distribution(const Policy& policy, const SparseMatrix& norm_adj, const StateMatrix& state,
                          std::span<const std::uint8_t> valid);

enum class SelectMode { Sample, Greedy };

/// Sample mode draws from `dist`; greedy mode takes the argmax with ties going
/// to the lowest node id.
int select_action(const Vector& dist, SelectMode mode, Rng& rng);

double critic_value(const GcnParams<double>& critic, const SparseMatrix& norm_adj, const DenseMatrix& state);

inline double td_target(double reward, double gamma, double next_value, bool terminal) {
  return reward + (terminal ? 0.0 : gamma * next_value);
}

struct Transition {
  DenseMatrix state;
  int action = -1;
  std::vector<std::uint8_t> valid;  // action mask under `state`
  double reward = 0.0;
  DenseMatrix next_state;
  bool terminal = false;
};

struct A2CGradients {
  GcnParams<double> actor;
  GcnParams<double> critic;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<double> advantages;
};

/// Gradients of the squared TD error (targets held fixed) and of the
/// advantage-weighted negative log-likelihood (advantages held fixed), each
/// averaged over the batch.
A2CGradients a2c_gradients(const Policy& policy, const SparseMatrix& norm_adj, std::span<const Transition> batch,
                           double gamma);

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

/// Averages the gradients in order and applies one Adam step to each network.
UpdateStats apply_gradients(Policy& policy, std::span<const A2CGradients> grads, double actor_lr,
                            double critic_lr);

UpdateStats a2c_update(Policy& policy, const SparseMatrix& norm_adj, std::span<const Transition> batch,
                       double gamma, double actor_lr, double critic_lr);

struct TrainConfig {
  int budget = 35;
  int update_freq = 7;
  int max_episodes = 4000;
  double gamma = 0.99;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int parallel_episodes = 5;
  int hidden = 8;
  std::uint64_t seed = 0;
  int workers = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct TrainLogRow {
  int episode = 0;
  int instance = 0;
  double cumulative_reward = 0.0;
  double final_valid_macro_f1 = 0.0;
  std::vector<int> selected;
};

struct TrainResult {
  Policy policy;
  std::vector<TrainLogRow> log;
  int updates = 0;
  int transitions = 0;
};

/// Called after every episode with (episode index, rows of that episode).
using EpisodeCallback = std::function<void(int, std::span<const TrainLogRow>)>;

/// A2C training on a fully labeled source graph. Each episode runs
/// `parallel_episodes` environments in lockstep; every `update_freq` steps
/// their batch gradients are averaged and applied once.
TrainResult train_policy(const Environment& source, const RewardConfig& reward_cfg, const TrainConfig& cfg,
                         const std::vector<StateFeature>& features, const EpisodeCallback& on_episode = {});

/// Greedy episodes of `test_budget` steps on `target`, one per seed.
EvaluationResult evaluate_policy(const Policy& policy, const Environment& target, const RewardConfig& reward_cfg,
                                 int test_budget, const std::vector<std::uint64_t>& seeds, int workers = 1);

}  // namespace gcbr
