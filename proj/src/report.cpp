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

#include "gcbr/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gcbr {

namespace fs = std::filesystem;

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

namespace {

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

std::string histogram_cell(const std::vector<int>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(h[i]);
  }
  return s;
}

}  // namespace

void write_metrics_csv(const fs::path& file, std::span<const EvaluationResult> results) {
  auto out = open_out(file);
  out << kMetricsHeader << '\n';
  for (const auto& r : results) {
    std::vector<double> mean_hist;
    for (const auto& run : r.runs) {
      out << r.method << ',' << run.seed << ',' << format_double(run.final.micro_f1) << ','
          << format_double(run.final.macro_f1) << ',' << format_double(run.final.imbalance_ratio) << ",,,,"
          << histogram_cell(run.selection_histogram) << '\n';
      mean_hist.resize(run.selection_histogram.size(), 0.0);
      for (std::size_t c = 0; c < run.selection_histogram.size(); ++c) {
        mean_hist[c] += run.selection_histogram[c] / static_cast<double>(r.runs.size());
      }
    }
    const auto mi = r.micro_f1(), ma = r.macro_f1(), ib = r.imbalance_ratio();
    out << r.method << ",summary," << format_double(mi.mean) << ',' << format_double(ma.mean) << ','
        << format_double(ib.mean) << ',' << format_double(mi.stddev) << ',' << format_double(ma.stddev) << ','
        << format_double(ib.stddev) << ',';
    for (std::size_t c = 0; c < mean_hist.size(); ++c) out << (c ? ";" : "") << format_double(mean_hist[c]);
    out << '\n';
  }
}

void write_trace_csv(const fs::path& file, std::span<const EvaluationResult> results) {
  auto out = open_out(file);
  out << kTraceHeader << '\n';
  for (const auto& r : results) {
    for (const auto& run : r.runs) {
      for (const auto& s : run.trace) {
        out << r.method << ',' << run.seed << ',' << s.step << ',' << s.node << ',' << s.true_class << ','
            << format_double(s.gain) << ',' << format_double(s.diversity) << ',' << format_double(s.penalty)
            << ',' << format_double(s.reward) << ',' << format_double(s.valid_macro_f1) << ','
            << format_double(s.imbalance_ratio) << '\n';
      }
    }
  }
}

void write_train_log_csv(const fs::path& file, std::span<const TrainLogRow> rows) {
  auto out = open_out(file);
  out << kTrainLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.episode << ',' << r.instance << ',' << format_double(r.cumulative_reward) << ','
        << format_double(r.final_valid_macro_f1) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << x;
  return s.str();
}

std::string tick_label(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      const double sd = i < s.stddev.size() ? s.stddev[i] : 0.0;
      y0 = std::min(y0, s.mean[i] - sd);
      y1 = std::max(y1, s.mean[i] + sd);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    o << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(xv)) << "\" y2=\""
      << num(top + ph + 5) << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(yv)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(sy(yv)) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 15) << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPalette.size()];
    if (!s.stddev.empty() && s.x.size() > 1) {
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o << num(sx(s.x[i])) << ',' << num(sy(s.mean[i] + s.stddev[i])) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) o << num(sx(s.x[i])) << ',' << num(sy(s.mean[i] - s.stddev[i])) << ' ';
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << num(sx(s.x[i])) << ',' << num(sy(s.mean[i])) << ' ';
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      o << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.mean[i])) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(si);
    o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 32)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << escape_xml(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<fs::path> render_sweep_charts(const fs::path& sweep_csv, const fs::path& dir) {
  const CsvTable t = read_csv(sweep_csv);
  const auto c_axis = t.column("axis"), c_value = t.column("value"), c_method = t.column("method");
  std::vector<fs::path> written;
  if (t.rows.empty()) return written;
  const std::string axis = t.rows.front()[c_axis];
  fs::create_directories(dir);

  for (const char* metric : {"micro_f1", "macro_f1", "imbalance_ratio"}) {
    const auto c_metric = t.column(metric);
    // method -> value -> samples; first-seen method order is kept.
    std::vector<std::string> order;
    std::map<std::string, std::map<double, std::vector<double>>> samples;
    for (const auto& row : t.rows) {
      const std::string& method = row[c_method];
      if (!samples.count(method)) order.push_back(method);
      samples[method][std::stod(row[c_value])].push_back(std::stod(row[c_metric]));
    }
    std::vector<Series> series;
    for (const auto& method : order) {
      Series s;
      s.name = method;
      for (const auto& [value, xs] : samples[method]) {
        const MeanStd ms = mean_std(xs);
        s.x.push_back(value);
        s.mean.push_back(ms.mean);
        s.stddev.push_back(ms.stddev);
      }
      series.push_back(std::move(s));
    }
    const fs::path file = dir / ("sweep_" + axis + "_" + metric + ".svg");
    std::ofstream(file) << render_line_chart(std::string(metric) + " vs " + axis, axis, metric, series);
    written.push_back(file);
  }
  return written;
}

}  // namespace gcbr
