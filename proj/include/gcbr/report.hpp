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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gcbr/env.hpp"
#include "gcbr/policy.hpp"

namespace gcbr {

/// Shortest decimal form that round-trips; identical bits give identical text.
std::string format_double(double x);

// Headers shared by every writer and by the chart renderer.
inline constexpr const char* kMetricsHeader =
    "method,seed,micro_f1,macro_f1,imbalance_ratio,micro_f1_std,macro_f1_std,imbalance_ratio_std,class_histogram";
inline constexpr const char* kTraceHeader =
    "method,seed,step,node_id,true_class,g,h,penalty,reward,valid_macro_f1,imbalance_ratio_so_far";
inline constexpr const char* kTrainLogHeader = "episode,instance,cumulative_reward,final_valid_macro_f1";
inline constexpr const char* kSweepHeader = "axis,value,method,seed,micro_f1,macro_f1,imbalance_ratio";
inline constexpr const char* kAblationHeader =
    "method,removed_feature,micro_f1,macro_f1,imbalance_ratio,micro_f1_std,macro_f1_std,imbalance_ratio_std";

/// One row per run, then one `summary` row per method (means in the metric
/// columns, sample standard deviations in the *_std columns).
void write_metrics_csv(const std::filesystem::path& file, std::span<const EvaluationResult> results);
void write_trace_csv(const std::filesystem::path& file, std::span<const EvaluationResult> results);
void write_train_log_csv(const std::filesystem::path& file, std::span<const TrainLogRow> rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& file);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Line chart with a +-1 std band per series.
std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series);

/// Reads a long-form sweep CSV and writes one chart per metric into `dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> render_sweep_charts(const std::filesystem::path& sweep_csv,
                                                       const std::filesystem::path& dir);

}  // namespace gcbr
