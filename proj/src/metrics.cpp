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

#include "gcbr/metrics.hpp"

#include <stdexcept>

namespace gcbr {

std::vector<int> argmax_rows(const DenseMatrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double micro_f1(std::span<const int> pred, std::span<const int> truth, std::span<const int> index_set) {
  if (index_set.empty()) throw std::invalid_argument("micro_f1: empty index set");
  std::size_t correct = 0;
  for (int v : index_set) correct += pred[static_cast<std::size_t>(v)] == truth[static_cast<std::size_t>(v)];
  return static_cast<double>(correct) / static_cast<double>(index_set.size());
}

double macro_f1(std::span<const int> pred, std::span<const int> truth, std::span<const int> index_set,
                int num_classes) {
  if (index_set.empty()) throw std::invalid_argument("macro_f1: empty index set");
  if (num_classes <= 0) throw std::invalid_argument("macro_f1: num_classes must be positive");
  std::vector<int> tp(static_cast<std::size_t>(num_classes), 0);
  std::vector<int> fp(tp), fn(tp);
  for (int v : index_set) {
    const int p = pred[static_cast<std::size_t>(v)];
    const int t = truth[static_cast<std::size_t>(v)];
    if (p == t) {
      ++tp[static_cast<std::size_t>(t)];
    } else {
      if (p >= 0 && p < num_classes) ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(t)];
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    const double precision = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
    sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / num_classes;
}

}  // namespace gcbr
