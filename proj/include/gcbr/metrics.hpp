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

#include <span>
#include <vector>

#include "gcbr/types.hpp"

namespace gcbr {

/// Row-wise argmax; ties go to the lowest column.
std::vector<int> argmax_rows(const DenseMatrix& scores);

/// Fraction of `index_set` whose prediction equals the truth. Equals pooled
/// micro-F1 for single-label multiclass data.
double micro_f1(std::span<const int> pred, std::span<const int> truth, std::span<const int> index_set);

/// Unweighted mean of per-class F1 over all `num_classes` classes. A 0/0
/// precision, recall or F1 counts as 0.
double macro_f1(std::span<const int> pred, std::span<const int> truth, std::span<const int> index_set,
                int num_classes);

}  // namespace gcbr
