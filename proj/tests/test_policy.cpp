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

#include <set>

#include "fixtures.hpp"
#include "gcbr/policy.hpp"
#include "oracles.hpp"

using namespace gcbr;

namespace {

bool close(double fd, double analytic) {
  return std::abs(fd - analytic) < 1e-8 || oracle::relative_error(fd, analytic) < 1e-4;
}

DenseMatrix random_state(int n, int d, Rng& rng) {
  DenseMatrix s(n, d);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
  return s;
}

SparseMatrix random_adj(int n, Rng& rng) {
  return normalized_adjacency(fixtures::random_graph(n, 2, 0.4, rng));
}

Transition random_transition(int n, int d, Rng& rng, bool terminal) {
  Transition t;
  t.state = random_state(n, d, rng);
  t.next_state = random_state(n, d, rng);
  t.valid.assign(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) t.valid[static_cast<std::size_t>(v)] = rng.bernoulli(0.7);
  t.valid[0] = 1;
  std::vector<int> ok;
  for (int v = 0; v < n; ++v) {
    if (t.valid[static_cast<std::size_t>(v)]) ok.push_back(v);
  }
  t.action = ok[rng.uniform_index(ok.size())];
  t.reward = rng.uniform(-1, 1);
  t.terminal = terminal;
  return t;
}

SbmConfig skewed_sbm(int n) {
  SbmConfig cfg;
  cfg.num_nodes = n;
  return cfg;
}

}  // namespace

TEST_CASE("masked softmax fixtures") {
  const Vector equal = Vector::Constant(5, 0.3);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
  const Vector p = masked_softmax(equal, mask);
  CHECK(p(0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(p(1) == 0.0);
  CHECK(p(4) == 0.0);
  CHECK_THROWS(masked_softmax(equal, std::vector<std::uint8_t>(5, 0)));
  CHECK_THROWS(masked_softmax(equal, std::vector<std::uint8_t>(4, 1)));
}

TEST_CASE("actor distribution matches a straight-line oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 7;
    const SparseMatrix adj = random_adj(n, rng);
    const Policy policy = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, rng.next_u64());
    StateMatrix st{random_state(n, 5, rng), policy.features};
    const Transition t = random_transition(n, 5, rng, false);
    const Vector dist = actor_distribution(policy, adj, st, t.valid);

    const auto h = oracle::gcn(oracle::from_eigen(DenseMatrix(adj)), oracle::from_eigen(st.values),
                               oracle::from_eigen(policy.actor.w0), oracle::from_eigen(policy.actor.w1), true);
    std::vector<double> e(n, 0.0);
    double z = 0.0;
    for (int v = 0; v < n; ++v) {
      if (!t.valid[static_cast<std::size_t>(v)]) continue;
      double s = policy.actor.head_b(0, 0);
      for (int k = 0; k < 8; ++k) s += h[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] * policy.actor.head_w(k, 0);
      z += (e[static_cast<std::size_t>(v)] = std::exp(s));
    }
    for (int v = 0; v < n; ++v) {
      CHECK(std::abs(dist(v) - e[static_cast<std::size_t>(v)] / z) < 1e-12);
      if (!t.valid[static_cast<std::size_t>(v)]) CHECK(dist(v) == 0.0);
    }
  }
}

TEST_CASE("action selection") {
  Rng rng(1);
  Vector one_hot = Vector::Zero(6);
  one_hot(3) = 1.0;
  CHECK(select_action(one_hot, SelectMode::Greedy, rng) == 3);
  CHECK(select_action(one_hot, SelectMode::Sample, rng) == 3);

  Vector tie = Vector::Zero(6);
  tie(2) = tie(5) = 0.5;
  CHECK(select_action(tie, SelectMode::Greedy, rng) == 2);

  Vector two = Vector::Zero(4);
  two(1) = 0.25;
  two(3) = 0.75;
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    const int a = select_action(two, SelectMode::Sample, rng);
    CHECK((a == 1 || a == 3));
    hits += a == 1;
  }
  CHECK(std::abs(hits / 10000.0 - 0.25) <= 0.02);
}

TEST_CASE("critic value fixtures and oracle") {
  Rng rng(3);
  Policy p = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, 1);
  const SparseMatrix adj = random_adj(6, rng);
  const DenseMatrix s = random_state(6, 5, rng);
  GcnParams<double> zero = p.critic.zeros_like();
  CHECK(critic_value(zero, adj, s) == 0.0);

  const SparseMatrix single = normalized_adjacency(Graph(1, {}, DenseMatrix::Zero(1, 1), {0}, 1));
  const DenseMatrix s1 = random_state(1, 5, rng);
  CHECK(critic_value(p.critic, single, s1) == gcn_forward(single, s1, p.critic, Activation::None).output(0, 0));

  for (int trial = 0; trial < 20; ++trial) {
    p = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, rng.next_u64());
    const DenseMatrix st = random_state(6, 5, rng);
    const auto out = oracle::gcn(oracle::from_eigen(DenseMatrix(adj)), oracle::from_eigen(st),
                                 oracle::from_eigen(p.critic.w0), oracle::from_eigen(p.critic.w1), false);
    double mean = 0.0;
    for (const auto& row : out) mean += row[0] / 6.0;
    CHECK(std::abs(critic_value(p.critic, adj, st) - mean) < 1e-12);
  }
}

TEST_CASE("td target fixtures") {
  CHECK(td_target(1.0, 0.99, 2.0, false) == doctest::Approx(2.98).epsilon(1e-15));
  CHECK(td_target(0.5, 0.99, 123.0, true) == 0.5);
  CHECK(td_target(0.7, 0.0, 9.0, false) == 0.7);
}

TEST_CASE("zero advantage gives zero actor gradient and zero critic loss") {
  Rng rng(4);
  Policy p = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, 2);
  p.critic = p.critic.zeros_like();
  const SparseMatrix adj = random_adj(6, rng);
  std::vector<Transition> batch;
  for (int i = 0; i < 3; ++i) {
    batch.push_back(random_transition(6, 5, rng, true));
    batch.back().reward = 0.0;
  }
  const auto g = a2c_gradients(p, adj, batch, 0.99);
  CHECK(g.critic_loss == 0.0);
  g.actor.visit([](const char*, const DenseMatrix& t) { CHECK(t.isZero(0.0)); });
  const Policy before = p;
  const auto stats = a2c_update(p, adj, batch, 0.99, 1e-3, 1e-3);
  CHECK(stats.critic_loss == 0.0);
  CHECK(p.actor.w0 == before.actor.w0);

  // A critic that already predicts the terminal reward has nothing to learn.
  Policy q = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, 3);
  Transition t = random_transition(6, 5, rng, true);
  t.reward = critic_value(q.critic, adj, t.state);
  const auto gq = a2c_gradients(q, adj, std::span<const Transition>(&t, 1), 0.99);
  CHECK(gq.critic_loss == 0.0);
  gq.critic.visit([](const char*, const DenseMatrix& m) { CHECK(m.isZero(0.0)); });
}

TEST_CASE("a2c gradients match finite differences of the losses") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    const SparseMatrix adj = random_adj(n, rng);
    Policy p = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 4, rng.next_u64());
    std::vector<Transition> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(random_transition(n, 5, rng, i == 2));
    const auto g = a2c_gradients(p, adj, batch, 0.9);

    const auto actor_loss = [&] {
      double loss = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vector pi = masked_softmax(actor_forward(p.actor, adj, batch[i].state).scores, batch[i].valid);
        loss -= g.advantages[i] * std::log(pi(batch[i].action)) / 3.0;
      }
      return loss;
    };
    const auto critic_loss = [&] {
      double loss = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double d = g.targets[i] - critic_value(p.critic, adj, batch[i].state);
        loss += d * d / 3.0;
      }
      return loss;
    };
    CHECK(actor_loss() == doctest::Approx(g.actor_loss).epsilon(1e-12));
    CHECK(critic_loss() == doctest::Approx(g.critic_loss).epsilon(1e-12));

    std::vector<DenseMatrix*> params;
    std::vector<const DenseMatrix*> grads;
    p.actor.visit([&](const char*, DenseMatrix& t) { params.push_back(&t); });
    g.actor.visit([&](const char*, const DenseMatrix& t) { grads.push_back(&t); });
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (Eigen::Index i = 0; i < params[k]->size(); ++i) {
        const double fd = oracle::central_difference(params[k]->data()[i], actor_loss);
        CHECK(close(fd, grads[k]->data()[i]));
      }
    }
    for (auto [w, gw] : {std::pair{&p.critic.w0, &g.critic.w0}, std::pair{&p.critic.w1, &g.critic.w1}}) {
      for (Eigen::Index i = 0; i < w->size(); ++i) {
        const double fd = oracle::central_difference(w->data()[i], critic_loss);
        CHECK(close(fd, gw->data()[i]));
      }
    }
  }
}

TEST_CASE("checkpoints round-trip and enforce compatibility") {
  const Policy p = Policy::create(state_columns(RewardVariant::GcbrPlusPlus), RewardVariant::GcbrPlusPlus, 8, 9);
  const auto file = std::filesystem::temp_directory_path() / "gcbr_test_policy.json";
  p.save(file);
  const Policy q = Policy::load(file);
  CHECK(q.state_dim() == 6);
  CHECK(q.variant == RewardVariant::GcbrPlusPlus);
  CHECK(q.actor.w0 == p.actor.w0);
  CHECK(q.actor.head_b == p.actor.head_b);
  CHECK(q.critic.w1 == p.critic.w1);
  CHECK_NOTHROW(q.check_compatible(state_columns(RewardVariant::GcbrPlusPlus), RewardVariant::GcbrPlusPlus));
  CHECK_THROWS_AS(q.check_compatible(state_columns(RewardVariant::Gcbr), RewardVariant::GcbrPlusPlus), EnvError);
  CHECK_THROWS_AS(q.check_compatible(state_columns(RewardVariant::GcbrPlusPlus), RewardVariant::Gcbr), EnvError);

  nlohmann::json j = p.to_json();
  j["state_dim"] = 5;
  CHECK_THROWS_AS(Policy::from_json(j), EnvError);
}

TEST_CASE("train config rejects a budget that is not a multiple of the update frequency") {
  TrainConfig cfg;
  cfg.budget = 36;
  cfg.update_freq = 7;
  try {
    cfg.validate();
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("B must be a multiple of F") != std::string::npos);
  }
}

TEST_CASE("update and transition counts per episode") {
  const Graph g = generate_sbm(skewed_sbm(200), 1);
  const Environment env(g, make_split(g, 2, 40, 40));
  TrainConfig cfg;
  cfg.max_episodes = 1;
  cfg.budget = 7;
  cfg.update_freq = 7;
  cfg.parallel_episodes = 1;
  auto r = train_policy(env, {}, cfg, state_columns(RewardVariant::Gcbr));
  CHECK(r.updates == 1);
  CHECK(r.transitions == 7);
  CHECK(r.log.size() == 1);
  CHECK(r.log[0].selected.size() == 7);

  cfg.budget = 35;
  cfg.parallel_episodes = 2;
  r = train_policy(env, {}, cfg, state_columns(RewardVariant::Gcbr));
  CHECK(r.updates == 5);
  CHECK(r.transitions == 2 * 35);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Graph g = generate_sbm(skewed_sbm(150), 1);
  const Environment env(g, make_split(g, 2, 30, 30));
  TrainConfig cfg;
  cfg.max_episodes = 2;
  cfg.budget = 14;
  cfg.seed = 77;
  const auto a = train_policy(env, {}, cfg, state_columns(RewardVariant::Gcbr));
  cfg.workers = 3;
  const auto b = train_policy(env, {}, cfg, state_columns(RewardVariant::Gcbr));
  CHECK(a.policy.actor.w0 == b.policy.actor.w0);
  CHECK(a.policy.critic.w1 == b.policy.critic.w1);
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].selected == b.log[i].selected);
}

TEST_CASE("evaluation labels exactly the test budget") {
  const Graph g = generate_sbm(skewed_sbm(400), 3);
  const Environment env(g, make_split(g, 4, 60, 60));
  const Policy p = Policy::create(state_columns(RewardVariant::Gcbr), RewardVariant::Gcbr, 8, 5);
  const auto r = evaluate_policy(p, env, {}, 20 * g.num_classes(), {1, 2}, 1);
  REQUIRE(r.runs.size() == 2);
  for (const auto& run : r.runs) {
    int total = 0;
    for (int c : run.selection_histogram) total += c;
    CHECK(total == 100);
    CHECK(run.trace.size() == 100);
    std::set<int> distinct;
    for (const auto& s : run.trace) distinct.insert(s.node);
    CHECK(distinct.size() == 100);
  }
  CHECK_THROWS_AS(evaluate_policy(p, env, {}, 400, {1}, 1), EnvError);
}

TEST_CASE("episode reward improves over 200 training episodes") {
  const Graph g = generate_sbm(skewed_sbm(300), 21);
  const Environment env(g, make_split(g, 22, 60, 60));
  TrainConfig cfg;
  cfg.max_episodes = 200;
  cfg.seed = 5;
  const auto r = train_policy(env, {}, cfg, state_columns(RewardVariant::Gcbr));
  double first = 0.0, last = 0.0;
  const std::size_t per = static_cast<std::size_t>(cfg.parallel_episodes) * 20;
  for (std::size_t i = 0; i < per; ++i) {
    first += r.log[i].cumulative_reward / per;
    last += r.log[r.log.size() - 1 - i].cumulative_reward / per;
  }
  MESSAGE("first 20 episodes " << first << ", last 20 episodes " << last);
  CHECK(last - first >= 0.5);
}
