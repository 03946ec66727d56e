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

#include "gcbr/baselines.hpp"

#include <string>

#include "gcbr/parallel.hpp"

namespace gcbr {

std::string_view baseline_name(BaselineKind kind) {
  return kind == BaselineKind::Random ? "random" : "max_entropy";
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "random") return BaselineKind::Random;
  if (name == "max_entropy" || name == "maxentropy" || name == "entropy") return BaselineKind::MaxEntropy;
  throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

int baseline_select(BaselineKind kind, const Environment& env, const EnvState& state, Rng& rng) {
  const std::vector<int> pool = env.unlabeled_pool(state);
  if (pool.empty()) throw EnvError("unlabeled train pool is empty");
  if (kind == BaselineKind::Random) return pool[rng.uniform_index(pool.size())];

  const Vector entropy = feature_uncertainty(state.prev_predictions, env.graph().num_classes());
  int best = pool.front();
  for (int v : pool) {
    if (entropy(v) > entropy(best) || (entropy(v) == entropy(best) && v < best)) best = v;
  }
  return best;
}

EvaluationResult run_baseline(BaselineKind kind, const Environment& env, const RewardConfig& reward_cfg, int budget,
                              const std::vector<std::uint64_t>& seeds, int workers) {
  const int pool = static_cast<int>(env.split().train_idx.size());
  if (budget > pool) {
    throw EnvError("test budget " + std::to_string(budget) + " exceeds the train pool of " + std::to_string(pool) +
                   " nodes");
  }
  EvaluationResult result;
  result.method = std::string(baseline_name(kind));
  result.runs.resize(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    Rng rng(derive_seed(seeds[i], {0xba5e}));
    const Selector select = [&](const Environment& e, const EnvState& s) { return baseline_select(kind, e, s, rng); };
    result.runs[i] = run_selection_episode(env, reward_cfg, budget, seeds[i], select);
  });
  return result;
}

}  // namespace gcbr
