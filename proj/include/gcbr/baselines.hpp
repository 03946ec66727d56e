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
#include <string_view>
#include <vector>

#include "gcbr/env.hpp"
#include "gcbr/random.hpp"

namespace gcbr {

enum class BaselineKind { Random, MaxEntropy };

std::string_view baseline_name(BaselineKind kind);
BaselineKind parse_baseline(std::string_view name);

/// Random: uniform over unlabeled train nodes. MaxEntropy: the unlabeled train
/// node with the highest normalized prediction entropy, lowest id on ties.
int baseline_select(BaselineKind kind, const Environment& env, const EnvState& state, Rng& rng);

/// Same episode + finalize protocol as evaluate_policy, one run per seed. The
/// seed drives both the classifier initialization and the Random draws.
EvaluationResult run_baseline(BaselineKind kind, const Environment& env, const RewardConfig& reward_cfg, int budget,
                              const std::vector<std::uint64_t>& seeds, int workers = 1);

}  // namespace gcbr
