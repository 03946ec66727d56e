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

#include <memory>
#include <string>
#include <vector>

#include "gcbr/env.hpp"
#include "gcbr/graph.hpp"
#include "gcbr/random.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace gcbr;

/// Erdos-Renyi graph whose labels cover every class, with Gaussian features
/// shifted by the label so a classifier has something to learn.
inline Graph random_graph(int n, int m, double p, Rng& rng, int dim = 4) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) labels[static_cast<std::size_t>(v)] = v < m ? v : static_cast<int>(rng.uniform_index(m));
  DenseMatrix x(n, dim);
  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < dim; ++k) x(v, k) = rng.normal() + (k == labels[static_cast<std::size_t>(v)] % dim ? 1.0 : 0.0);
  }
  return Graph(n, edges, x, labels, m);
}

/// A graph and an environment over it. The environment refers to the graph, so
/// both live on the heap together.
struct SmallEnv {
  std::unique_ptr<Graph> graph;
  std::unique_ptr<Environment> env;
};

inline SmallEnv small_env(int n, int m, int valid, int test, Rng& rng, ClassifierConfig cls = {}) {
  SmallEnv out;
  out.graph = std::make_unique<Graph>(random_graph(n, m, 0.35, rng));
  cls.hidden = 8;
  out.env = std::make_unique<Environment>(*out.graph, make_split(*out.graph, rng.next_u64(), valid, test), cls);
  return out;
}

inline int random_valid_action(const Environment& env, const EnvState& s, Rng& rng) {
  const auto pool = env.unlabeled_pool(s);
  return pool[rng.uniform_index(pool.size())];
}

/// Largest deviation of each state column from the brute-force oracles, in
/// column order centrality, uncertainty, class_diversity, selectivity,
/// criteria_similarity, majority_score.
inline std::vector<double> state_deviation(const Environment& env, const EnvState& s) {
  const Graph& g = env.graph();
  const int n = g.num_nodes(), m = g.num_classes();
  const auto state = env.build_state(s, std::vector<StateFeature>(kAllFeatures.begin(), kAllFeatures.end()));

  oracle::Mat raw = oracle::zeros(static_cast<std::size_t>(n), 6);
  const auto pr = oracle::pagerank(oracle::from_eigen(DenseMatrix(g.adjacency())), 0.85);
  const auto major = [&] {
    std::vector<int> out;
    for (int c = 0; c < m; ++c) {
      if (oracle::in_majority(s.class_counts[static_cast<std::size_t>(c)], s.budget, m)) out.push_back(c);
    }
    return out;
  }();
  for (int v = 0; v < n; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    std::vector<double> p(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) p[static_cast<std::size_t>(c)] = s.prev_predictions(v, c);
    const bool labeled = s.labeled_mask[vi] != 0;
    std::vector<double> mixed = p;
    if (labeled) {
      std::fill(mixed.begin(), mixed.end(), 0.0);
      mixed[static_cast<std::size_t>(g.label(v))] = 1.0;
    }
    raw[vi][0] = pr[vi];
    raw[vi][1] = oracle::entropy_normalized(p);
    raw[vi][2] = oracle::class_diversity(mixed, s.class_counts);
    raw[vi][3] = labeled ? 1.0 : 0.0;
    double maj = 0.0;
    for (int c : major) maj += mixed[static_cast<std::size_t>(c)];
    raw[vi][5] = maj;
  }
  for (std::size_t j : {0u, 1u, 2u, 3u, 5u}) oracle::normalize_column(raw, j);

  // Criteria similarity is checked against the library's own normalized
  // criteria so that it can be compared bit for bit.
  oracle::Mat crit = oracle::zeros(static_cast<std::size_t>(n), 4);
  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < 4; ++k) crit[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] = state.values(v, k);
  }
  for (int v = 0; v < n; ++v) {
    raw[static_cast<std::size_t>(v)][4] = oracle::nearest_labeled(crit, static_cast<std::size_t>(v), s.labeled_set);
  }
  oracle::normalize_column(raw, 4);

  std::vector<double> dev(6, 0.0);
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < 6; ++j) {
      dev[static_cast<std::size_t>(j)] = std::max(
          dev[static_cast<std::size_t>(j)], std::abs(state.values(v, j) - raw[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)]));
    }
  }
  return dev;
}

}  // namespace fixtures
