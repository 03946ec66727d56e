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

#include "gcbr/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gcbr/random.hpp"

namespace gcbr {

namespace fs = std::filesystem;

Graph::Graph(int num_nodes, const std::vector<std::pair<int, int>>& edges, DenseMatrix features,
             std::vector<int> labels, int num_classes)
    : num_nodes_(num_nodes),
      num_classes_(num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (num_nodes_ <= 0) throw GraphError("graph must have at least one node");
  if (num_classes_ <= 0) throw GraphError("graph must have at least one class");
  if (features_.rows() != num_nodes_) {
    throw GraphError("feature matrix has " + std::to_string(features_.rows()) +
                     " rows but graph has " + std::to_string(num_nodes_) + " nodes");
  }
  if (static_cast<int>(labels_.size()) != num_nodes_) {
    throw GraphError("label vector has " + std::to_string(labels_.size()) + " entries but graph has " +
                     std::to_string(num_nodes_) + " nodes");
  }
  if (!features_.allFinite()) throw GraphError("feature matrix contains non-finite values");

  std::vector<int> seen(static_cast<std::size_t>(num_classes_), 0);
  for (int v = 0; v < num_nodes_; ++v) {
    const int c = labels_[static_cast<std::size_t>(v)];
    if (c < 0 || c >= num_classes_) {
      throw GraphError("label " + std::to_string(c) + " of node " + std::to_string(v) +
                       " outside [0, " + std::to_string(num_classes_) + ")");
    }
    ++seen[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < num_classes_; ++c) {
    if (seen[static_cast<std::size_t>(c)] == 0) {
      throw GraphError("class " + std::to_string(c) + " has no nodes");
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= num_nodes_ || v < 0 || v >= num_nodes_) {
      throw GraphError("node id out of range in edge (" + std::to_string(u) + ", " +
                       std::to_string(v) + ")");
    }
    if (u == v) continue;
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  adjacency_.resize(num_nodes_, num_nodes_);
  // Duplicates collapse to weight 1 instead of being summed.
  adjacency_.setFromTriplets(triplets.begin(), triplets.end(), [](double, double) { return 1.0; });
  adjacency_.makeCompressed();
}

int Graph::degree(int v) const {
  return static_cast<int>(adjacency_.outerIndexPtr()[v + 1] - adjacency_.outerIndexPtr()[v]);
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(num_edges()));
  for (int u = 0; u < num_nodes_; ++u) {
    for (SparseMatrix::InnerIterator it(adjacency_, u); it; ++it) {
      const int v = static_cast<int>(it.col());
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::vector<int> Graph::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(num_classes_), 0);
  for (int c : labels_) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

void SbmConfig::validate() const {
  if (class_proportions.empty()) throw GraphError("sbm: class_proportions is empty");
  double sum = 0.0;
  for (double p : class_proportions) {
    if (!(p >= 0.0)) throw GraphError("sbm: class proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw GraphError("sbm: class proportions must sum to 1");
  if (!(inter_edge_prob >= 0.0 && inter_edge_prob <= intra_edge_prob && intra_edge_prob <= 1.0)) {
    throw GraphError("sbm: require 0 <= inter_edge_prob <= intra_edge_prob <= 1");
  }
  if (feature_dim < static_cast<int>(class_proportions.size())) {
    throw GraphError("sbm: feature_dim must be at least the number of classes");
  }
  if (num_nodes < static_cast<int>(class_proportions.size())) {
    throw GraphError("sbm: num_nodes must be at least the number of classes");
  }
}

double SbmConfig::intra_prob(int class_size) const {
  if (!degree_balanced || class_size == 0) return intra_edge_prob;
  const double m = static_cast<double>(class_proportions.size());
  return intra_edge_prob * num_nodes / (m * class_size);
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string where(const fs::path& file, int line) {
  return file.filename().string() + ":" + std::to_string(line) + ": ";
}

Graph load_edge_list_csv(const fs::path& dir) {
  const fs::path edges_path = dir / "edges.txt";
  const fs::path features_path = dir / "features.csv";
  if (!fs::exists(edges_path)) throw GraphError("missing file " + edges_path.string());
  if (!fs::exists(features_path)) throw GraphError("missing file " + features_path.string());

  std::ifstream fin(features_path);
  std::string line;
  int line_no = 0;
  if (!std::getline(fin, line)) throw GraphError(where(features_path, 1) + "empty file");
  ++line_no;
  const auto header = split_csv(line);
  if (header.size() < 2 || header.back() != "label") {
    throw GraphError(where(features_path, 1) + "header must be f0,...,f{d-1},label");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(fin, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != dim + 1) {
      throw GraphError(where(features_path, line_no) + "expected " + std::to_string(dim + 1) +
                       " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      if (!parse_number(cells[j], row[j])) {
        throw GraphError(where(features_path, line_no) + "non-numeric feature '" + cells[j] + "'");
      }
    }
    int label = 0;
    if (!parse_number(cells[dim], label)) {
      throw GraphError(where(features_path, line_no) + "non-integer label '" + cells[dim] + "'");
    }
    if (label < 0) {
      throw GraphError(where(features_path, line_no) + "label outside [0, m): " + cells[dim]);
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw GraphError(where(features_path, line_no) + "no node rows");

  DenseMatrix features(n, static_cast<Eigen::Index>(dim));
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) features(i, static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  const int m = *std::max_element(labels.begin(), labels.end()) + 1;

  std::ifstream ein(edges_path);
  std::vector<std::pair<int, int>> edges;
  line_no = 0;
  while (std::getline(ein, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream in(t);
    std::string a, b, extra;
    in >> a >> b;
    int u = 0, v = 0;
    if (!parse_number(a, u) || !parse_number(b, v) || (in >> extra)) {
      throw GraphError(where(edges_path, line_no) + "expected two integer node ids");
    }
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw GraphError(where(edges_path, line_no) + "node id out of range (" + std::to_string(n) +
                       " nodes declared)");
    }
    edges.emplace_back(u, v);
  }
  return Graph(n, edges, std::move(features), std::move(labels), m);
}

Graph load_json_bundle(const fs::path& file) {
  if (!fs::exists(file)) throw GraphError("missing file " + file.string());
  std::ifstream in(file);
  nlohmann::json j;
  try {
    in >> j;
    const int n = j.at("num_nodes").get<int>();
    const int m = j.at("num_classes").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) {
      const int u = e.at(0).get<int>();
      const int v = e.at(1).get<int>();
      if (u < 0 || u >= n || v < 0 || v >= n) {
        throw GraphError(file.filename().string() + ": node id out of range in edge (" +
                         std::to_string(u) + ", " + std::to_string(v) + ")");
      }
      edges.emplace_back(u, v);
    }
    const auto& feats = j.at("features");
    if (static_cast<int>(feats.size()) != n) {
      throw GraphError(file.filename().string() + ": features has " + std::to_string(feats.size()) +
                       " rows, expected " + std::to_string(n));
    }
    const auto dim = static_cast<Eigen::Index>(n > 0 ? feats.at(0).size() : 0);
    DenseMatrix x(n, dim);
    for (int i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(feats[i].size()) != dim) {
        throw GraphError(file.filename().string() + ": feature row " + std::to_string(i) +
                         " has wrong length");
      }
      for (Eigen::Index k = 0; k < dim; ++k) {
        const auto& cell = feats[i][static_cast<std::size_t>(k)];
        if (!cell.is_number()) {
          throw GraphError(file.filename().string() + ": non-numeric feature in row " +
                           std::to_string(i));
        }
        x(i, k) = cell.get<double>();
      }
    }
    auto labels = j.at("labels").get<std::vector<int>>();
    return Graph(n, edges, std::move(x), std::move(labels), m);
  } catch (const nlohmann::json::exception& e) {
    throw GraphError(file.filename().string() + ": malformed bundle: " + e.what());
  }
}

}  // namespace

Graph load_graph(const fs::path& path, GraphFormat format) {
  return format == GraphFormat::JsonBundle ? load_json_bundle(path) : load_edge_list_csv(path);
}

Graph load_graph(const fs::path& path) {
  return load_graph(path, path.extension() == ".json" ? GraphFormat::JsonBundle
                                                      : GraphFormat::EdgeListCsv);
}

void save_edge_list_csv(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream eout(dir / "edges.txt");
  for (const auto& [u, v] : g.edge_list()) eout << u << ' ' << v << '\n';
  std::ofstream fout(dir / "features.csv");
  fout.precision(17);
  for (int k = 0; k < g.feature_dim(); ++k) fout << 'f' << k << ',';
  fout << "label\n";
  for (int v = 0; v < g.num_nodes(); ++v) {
    for (int k = 0; k < g.feature_dim(); ++k) fout << g.features()(v, k) << ',';
    fout << g.label(v) << '\n';
  }
}

void save_json_bundle(const Graph& g, const fs::path& file) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes();
  j["num_classes"] = g.num_classes();
  auto edges = nlohmann::json::array();
  for (const auto& [u, v] : g.edge_list()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  auto feats = nlohmann::json::array();
  for (int v = 0; v < g.num_nodes(); ++v) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < g.feature_dim(); ++k) row.push_back(g.features()(v, k));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  j["labels"] = g.labels();
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream(file) << j.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Generation and structure

std::vector<int> apportion(const std::vector<double>& proportions, int total) {
  const std::size_t m = proportions.size();
  std::vector<int> counts(m);
  std::vector<double> remainders(m);
  int assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = proportions[i] * total;
    // The epsilon absorbs representation error such as 0.06 * 1000 = 59.999...
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    remainders[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % m, ++assigned) ++counts[order[k]];
  return counts;
}

Graph generate_sbm(const SbmConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.num_nodes;
  const int m = static_cast<int>(config.class_proportions.size());
  Rng rng(seed);

  const auto sizes = apportion(config.class_proportions, n);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < m; ++c) labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), c);
  rng.shuffle(labels.begin(), labels.end());

  std::vector<double> intra(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) {
    intra[c] = config.intra_prob(sizes[c]);
    if (intra[c] > 1.0 || intra[c] < config.inter_edge_prob) {
      throw GraphError("sbm: degree-balanced intra probability of class " + std::to_string(c) + " is " +
                       std::to_string(intra[c]) + ", outside [inter_edge_prob, 1]");
    }
  }

  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? intra[labels[u]] : config.inter_edge_prob;
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  DenseMatrix x(n, config.feature_dim);
  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < config.feature_dim; ++k) {
      x(v, k) = rng.normal() + (k == labels[v] ? config.feature_signal : 0.0);
    }
  }
  return Graph(n, edges, std::move(x), std::move(labels), m);
}

SparseMatrix normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  Vector inv_sqrt(n);
  for (int v = 0; v < n; ++v) inv_sqrt(v) = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(g.adjacency().nonZeros() + n));
  for (int u = 0; u < n; ++u) {
    triplets.emplace_back(u, u, inv_sqrt(u) * inv_sqrt(u));
    for (SparseMatrix::InnerIterator it(g.adjacency(), u); it; ++it) {
      const auto v = static_cast<int>(it.col());
      triplets.emplace_back(u, v, inv_sqrt(u) * inv_sqrt(v));
    }
  }
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

PageRankResult pagerank(const Graph& g, double damping, double tol, int max_iter) {
  if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("pagerank: damping must be in (0,1)");
  if (!(tol > 0.0)) throw std::invalid_argument("pagerank: tol must be positive");
  const int n = g.num_nodes();
  const SparseMatrix& a = g.adjacency();
  Vector inv_deg(n);
  for (int v = 0; v < n; ++v) {
    const int d = g.degree(v);
    inv_deg(v) = d > 0 ? 1.0 / d : 0.0;
  }

  PageRankResult result;
  result.scores = Vector::Constant(n, 1.0 / n);
  Vector next(n);
  for (int it = 1; it <= max_iter; ++it) {
    double dangling = 0.0;
    for (int v = 0; v < n; ++v) {
      if (inv_deg(v) == 0.0) dangling += result.scores(v);
    }
    const Vector spread = result.scores.cwiseProduct(inv_deg);
    // A is symmetric, so A * spread sums over in-neighbours.
    next = damping * (a * spread);
    next.array() += damping * dangling / n + (1.0 - damping) / n;
    const double delta = (next - result.scores).lpNorm<1>();
    result.scores.swap(next);
    result.iterations = it;
    if (delta < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

DataSplit make_split(const Graph& g, std::uint64_t seed, int valid_size, int test_size) {
  const int n = g.num_nodes();
  if (valid_size <= 0 || test_size <= 0) throw GraphError("split: valid and test sizes must be positive");
  if (valid_size + test_size >= n) {
    throw GraphError("split: valid_size + test_size (" + std::to_string(valid_size + test_size) +
                     ") must be less than num_nodes (" + std::to_string(n) + ")");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  DataSplit split;
  const auto vb = order.begin();
  split.test_idx.assign(vb, vb + test_size);
  split.valid_idx.assign(vb + test_size, vb + test_size + valid_size);
  split.train_idx.assign(vb + test_size + valid_size, order.end());
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.valid_idx.begin(), split.valid_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

double imbalance_ratio(const std::vector<int>& class_counts) {
  if (class_counts.empty()) throw std::invalid_argument("imbalance_ratio: empty class counts");
  const auto [lo, hi] = std::minmax_element(class_counts.begin(), class_counts.end());
  if (*lo == *hi) return 1.0;
  return static_cast<double>(*lo) / static_cast<double>(*hi);
}

}  // namespace gcbr
