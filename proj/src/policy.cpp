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

#include "gcbr/policy.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "gcbr/parallel.hpp"

namespace gcbr {

Policy Policy::create(std::vector<StateFeature> features, RewardVariant variant, int hidden, std::uint64_t seed) {
  if (features.empty()) throw std::invalid_argument("policy needs at least one state feature");
  Policy p;
  p.features = std::move(features);
  p.variant = variant;
  Rng rng(seed);
  const auto dim = static_cast<Eigen::Index>(p.features.size());
  p.actor = init_gcn<double>(dim, hidden, hidden, true, rng);
  p.critic = init_gcn<double>(dim, hidden, 1, false, rng);
  p.actor_opt = AdamState<double>::for_params(p.actor);
  p.critic_opt = AdamState<double>::for_params(p.critic);
  return p;
}

void Policy::check_compatible(const std::vector<StateFeature>& columns, RewardVariant v) const {
  if (static_cast<int>(columns.size()) != state_dim()) {
    throw EnvError("policy state_dim " + std::to_string(state_dim()) + " does not match environment state width " +
                   std::to_string(columns.size()));
  }
  if (columns != features) throw EnvError("policy state features differ from the environment's");
  if (v != variant) {
    throw EnvError("policy was trained for " + std::string(variant_name(variant)) + ", not " +
                   std::string(variant_name(v)));
  }
}

nlohmann::json Policy::to_json() const {
  nlohmann::json j;
  j["format"] = "gcbr-policy";
  j["version"] = 1;
  j["state_dim"] = state_dim();
  j["variant"] = variant_name(variant);
  auto names = nlohmann::json::array();
  for (StateFeature f : features) names.push_back(feature_name(f));
  j["features"] = std::move(names);
  j["actor"] = params_to_json(actor);
  j["critic"] = params_to_json(critic);
  return j;
}

Policy Policy::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "gcbr-policy") throw EnvError("not a policy checkpoint");
  Policy p;
  p.variant = parse_variant(j.at("variant").get<std::string>());
  for (const auto& name : j.at("features")) p.features.push_back(parse_feature(name.get<std::string>()));
  if (j.at("state_dim").get<int>() != p.state_dim()) throw EnvError("checkpoint state_dim disagrees with its features");
  p.actor = params_from_json<double>(j.at("actor"));
  p.critic = params_from_json<double>(j.at("critic"));
  if (p.actor.in_dim() != p.state_dim() || p.critic.in_dim() != p.state_dim() || !p.actor.has_head() ||
      p.critic.out_dim() != 1) {
    throw EnvError("checkpoint network shapes do not match state_dim");
  }
  p.actor_opt = AdamState<double>::for_params(p.actor);
  p.critic_opt = AdamState<double>::for_params(p.critic);
  return p;
}

void Policy::save(const std::filesystem::path& file) const {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream(file) << to_json().dump(1) << '\n';
}

Policy Policy::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw EnvError("cannot open checkpoint " + file.string());
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Actor / critic

ActorOutput actor_forward(const GcnParams<double>& actor, const SparseMatrix& norm_adj, const DenseMatrix& state) {
  ActorOutput out;
  out.gcn = gcn_forward<double>(norm_adj, state, actor, Activation::Relu);
  out.scores = out.gcn.output * actor.head_w.col(0);
  out.scores.array() += actor.head_b(0, 0);
  return out;
}

Vector masked_softmax(const Vector& scores, std::span<const std::uint8_t> valid) {
  if (static_cast<Eigen::Index>(valid.size()) != scores.size()) {
    throw ShapeError("masked_softmax: mask length differs from score count");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (valid[static_cast<std::size_t>(i)]) mx = std::max(mx, scores(i));
  }
  if (mx == -std::numeric_limits<double>::infinity()) throw EnvError("no valid action");
  Vector p = Vector::Zero(scores.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (valid[static_cast<std::size_t>(i)]) {
      p(i) = std::exp(scores(i) - mx);
      z += p(i);
    }
  }
  return p / z;
}

Vector actor_distribution(const Policy& policy, const SparseMatrix& norm_adj, const StateMatrix& state,
                          std::span<const std::uint8_t> valid) {
  if (state.values.cols() != policy.state_dim()) {
    throw ShapeError("actor_distribution: state has " + std::to_string(state.values.cols()) +
                     " columns, policy expects " + std::to_string(policy.state_dim()));
  }
  return masked_softmax(actor_forward(policy.actor, norm_adj, state.values).scores, valid);
}

int select_action(const Vector& dist, SelectMode mode, Rng& rng) {
  if (dist.size() == 0) throw std::invalid_argument("select_action: empty distribution");
  if (mode == SelectMode::Greedy) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < dist.size(); ++i) {
      if (dist(i) > dist(best)) best = i;
    }
    return static_cast<int>(best);
  }
  const double u = rng.uniform();
  double cum = 0.0;
  Eigen::Index last_positive = -1;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    if (dist(i) <= 0.0) continue;
    last_positive = i;
    cum += dist(i);
    if (u < cum) return static_cast<int>(i);
  }
  // Rounding left the cumulative sum just short of u.
  return static_cast<int>(last_positive);
}

double critic_value(const GcnParams<double>& critic, const SparseMatrix& norm_adj, const DenseMatrix& state) {
  return gcn_forward<double>(norm_adj, state, critic, Activation::None).output.mean();
}

// ---------------------------------------------------------------------------
// A2C

A2CGradients a2c_gradients(const Policy& policy, const SparseMatrix& norm_adj, std::span<const Transition> batch,
                           double gamma) {
  if (batch.empty()) throw std::invalid_argument("a2c update needs at least one transition");
  const double inv_f = 1.0 / static_cast<double>(batch.size());
  A2CGradients g;
  g.actor = policy.actor.zeros_like();
  g.critic = policy.critic.zeros_like();

  for (const Transition& tr : batch) {
    // Critic: V(S) = mean of final layer; the target is a constant.
    const auto cf = gcn_forward<double>(norm_adj, tr.state, policy.critic, Activation::None);
    const double value = cf.output.mean();
    const double next_value = tr.terminal ? 0.0 : critic_value(policy.critic, norm_adj, tr.next_state);
    const double target = td_target(tr.reward, gamma, next_value, tr.terminal);
    const double advantage = target - value;
    g.values.push_back(value);
    g.targets.push_back(target);
    g.advantages.push_back(advantage);
    g.critic_loss += advantage * advantage * inv_f;

    const auto n = static_cast<double>(cf.output.rows());
    const DenseMatrix grad_out = DenseMatrix::Constant(cf.output.rows(), 1, -2.0 * advantage * inv_f / n);
    accumulate(g.critic, gcn_backward<double>(norm_adj, cf, policy.critic, grad_out));

    // Actor: loss = -A * log pi(a | S) / F with A held constant.
    const auto af = actor_forward(policy.actor, norm_adj, tr.state);
    const Vector pi = masked_softmax(af.scores, tr.valid);
    const auto a = static_cast<Eigen::Index>(tr.action);
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < af.scores.size(); ++i) {
      if (tr.valid[static_cast<std::size_t>(i)]) mx = std::max(mx, af.scores(i));
    }
    double z = 0.0;
    for (Eigen::Index i = 0; i < af.scores.size(); ++i) {
      if (tr.valid[static_cast<std::size_t>(i)]) z += std::exp(af.scores(i) - mx);
    }
    const double log_pi = af.scores(a) - mx - std::log(z);
    g.actor_loss -= advantage * log_pi * inv_f;

    Vector grad_scores = pi * (advantage * inv_f);
    grad_scores(a) -= advantage * inv_f;
    g.actor.head_w.col(0) += af.gcn.output.transpose() * grad_scores;
    g.actor.head_b(0, 0) += grad_scores.sum();
    const DenseMatrix grad_hidden = grad_scores * policy.actor.head_w.col(0).transpose();
    const auto body = gcn_backward<double>(norm_adj, af.gcn, policy.actor, grad_hidden);
    g.actor.w0 += body.w0;
    g.actor.w1 += body.w1;
  }
  return g;
}

UpdateStats apply_gradients(Policy& policy, std::span<const A2CGradients> grads, double actor_lr, double critic_lr) {
  if (grads.empty()) throw std::invalid_argument("apply_gradients: no gradients");
  const double scale = 1.0 / static_cast<double>(grads.size());
  GcnParams<double> actor = policy.actor.zeros_like();
  GcnParams<double> critic = policy.critic.zeros_like();
  UpdateStats stats;
  for (const auto& g : grads) {
    accumulate(actor, g.actor, scale);
    accumulate(critic, g.critic, scale);
    stats.actor_loss += g.actor_loss * scale;
    stats.critic_loss += g.critic_loss * scale;
  }
  adam_step(policy.critic, critic, policy.critic_opt, critic_lr);
  adam_step(policy.actor, actor, policy.actor_opt, actor_lr);
  return stats;
}

UpdateStats a2c_update(Policy& policy, const SparseMatrix& norm_adj, std::span<const Transition> batch, double gamma,
                       double actor_lr, double critic_lr) {
  const A2CGradients g = a2c_gradients(policy, norm_adj, batch, gamma);
  return apply_gradients(policy, std::span<const A2CGradients>(&g, 1), actor_lr, critic_lr);
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (update_freq <= 0) fail("update_freq must be positive");
  if (budget <= 0) fail("budget must be positive");
  if (budget % update_freq != 0) fail("B must be a multiple of F (budget " + std::to_string(budget) +
                                      ", update_freq " + std::to_string(update_freq) + ")");
  if (max_episodes <= 0) fail("max_episodes must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must be in [0, 1]");
  if (!(actor_lr > 0.0)) fail("actor_lr must be positive");
  if (!(critic_lr > 0.0)) fail("critic_lr must be positive");
  if (parallel_episodes <= 0) fail("parallel_episodes must be positive");
  if (hidden <= 0) fail("hidden must be positive");
}

namespace {

struct Instance {
  EnvState env;
  Rng rng{0};
  StateMatrix state;
  std::vector<std::uint8_t> valid;
  std::vector<Transition> batch;
  TrainLogRow row;
};

}  // namespace

TrainResult train_policy(const Environment& source, const RewardConfig& reward_cfg, const TrainConfig& cfg,
                         const std::vector<StateFeature>& features, const EpisodeCallback& on_episode) {
  cfg.validate();
  reward_cfg.validate();
  if (cfg.budget > static_cast<int>(source.split().train_idx.size())) {
    throw std::invalid_argument("budget exceeds the source train pool");
  }
  TrainResult result;
  result.policy = Policy::create(features, reward_cfg.variant, cfg.hidden, derive_seed(cfg.seed, {0}));
  Policy& policy = result.policy;
  const SparseMatrix& adj = source.norm_adj();
  const auto p = static_cast<std::size_t>(cfg.parallel_episodes);
  const int blocks = cfg.budget / cfg.update_freq;

  for (int episode = 0; episode < cfg.max_episodes; ++episode) {
    std::vector<Instance> inst(p);
    parallel_for(p, cfg.workers, [&](std::size_t i) {
      const auto e = static_cast<std::uint64_t>(episode);
      inst[i].env = source.reset(reward_cfg, cfg.budget, derive_seed(cfg.seed, {1, e, i}));
      inst[i].rng = Rng(derive_seed(cfg.seed, {2, e, i}));
      inst[i].state = source.build_state(inst[i].env, features);
      inst[i].valid = source.valid_actions(inst[i].env);
      inst[i].row.episode = episode;
      inst[i].row.instance = static_cast<int>(i);
    });

    for (int block = 0; block < blocks; ++block) {
      parallel_for(p, cfg.workers, [&](std::size_t i) {
        Instance& it = inst[i];
        it.batch.clear();
        for (int k = 0; k < cfg.update_freq; ++k) {
          const Vector dist = actor_distribution(policy, adj, it.state, it.valid);
          const int action = select_action(dist, SelectMode::Sample, it.rng);
          const StepResult sr = source.step(it.env, action);
          Transition tr;
          tr.state = std::move(it.state.values);
          tr.action = action;
          tr.valid = std::move(it.valid);
          tr.reward = sr.reward;
          it.state = source.build_state(it.env, features);
          it.valid = source.valid_actions(it.env);
          tr.next_state = it.state.values;
          tr.terminal = it.env.done();
          it.batch.push_back(std::move(tr));
          it.row.cumulative_reward += sr.reward;
          it.row.selected.push_back(action);
        }
      });
      std::vector<A2CGradients> grads(p);
      parallel_for(p, cfg.workers,
                   [&](std::size_t i) { grads[i] = a2c_gradients(policy, adj, inst[i].batch, cfg.gamma); });
      apply_gradients(policy, grads, cfg.actor_lr, cfg.critic_lr);
      ++result.updates;
      result.transitions += static_cast<int>(p) * cfg.update_freq;
    }

    const std::size_t first = result.log.size();
    for (auto& it : inst) {
      it.row.final_valid_macro_f1 = it.env.prev_valid_macro_f1;
      result.log.push_back(std::move(it.row));
    }
    if (on_episode) on_episode(episode, std::span<const TrainLogRow>(result.log).subspan(first));
  }
  return result;
}

EvaluationResult evaluate_policy(const Policy& policy, const Environment& target, const RewardConfig& reward_cfg,
                                 int test_budget, const std::vector<std::uint64_t>& seeds, int workers) {
  const int pool = static_cast<int>(target.split().train_idx.size());
  if (test_budget > pool) {
    throw EnvError("test budget " + std::to_string(test_budget) + " exceeds the train pool of " +
                   std::to_string(pool) + " nodes");
  }
  policy.check_compatible(policy.features, reward_cfg.variant);
  EvaluationResult result;
  result.method = std::string(variant_name(policy.variant));
  result.runs.resize(seeds.size());
  const Selector greedy = [&policy](const Environment& env, const EnvState& s) {
    const StateMatrix state = env.build_state(s, policy.features);
    const Vector dist = actor_distribution(policy, env.norm_adj(), state, env.valid_actions(s));
    Rng unused(0);
    return select_action(dist, SelectMode::Greedy, unused);
  };
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    result.runs[i] = run_selection_episode(target, reward_cfg, test_budget, seeds[i], greedy);
  });
  return result;
}

}  // namespace gcbr
