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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcbr/types.hpp"

namespace gcbr {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected attributed graph with ground-truth node labels.
///
/// The adjacency is stored row-compressed with unit weights, symmetric, and
/// without self-loops. Instances are immutable once constructed.
class Graph {
 public:
  /// Builds a graph from an edge list. Edges are symmetrized, duplicates are
  /// merged and self-loops dropped. Throws GraphError on any invariant
  /// violation (id out of range, bad label, class with no node, row mismatch).
  Graph(int num_nodes, const std::vector<std::pair<int, int>>& edges, DenseMatrix features,
        std::vector<int> labels, int num_classes);

  int num_nodes() const { return num_nodes_; }
  int num_classes() const { return num_classes_; }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  /// Number of undirected edges.
  std::int64_t num_edges() const { return adjacency_.nonZeros() / 2; }
  int degree(int v) const;

  const SparseMatrix& adjacency() const { return adjacency_; }
  const DenseMatrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(int v) const { return labels_[static_cast<std::size_t>(v)]; }

  /// Undirected edge list with u < v, sorted.
  std::vector<std::pair<int, int>> edge_list() const;
  /// Histogram of labels over all nodes.
  std::vector<int> class_counts() const;

 private:
  int num_nodes_;
  int num_classes_;
  SparseMatrix adjacency_;
  DenseMatrix features_;
  std::vector<int> labels_;
};

struct DataSplit {
  std::vector<int> train_idx;
  std::vector<int> valid_idx;
  std::vector<int> test_idx;
};

struct SbmConfig {
  int num_nodes = 1000;
  std::vector<double> class_proportions{0.6, 0.2, 0.1, 0.06, 0.04};
  double intra_edge_prob = 0.02;
  double inter_edge_prob = 0.002;
  int feature_dim = 16;
  double feature_signal = 1.0;
  /// Scales the intra-block probability of class c by n / (m * n_c) so that
  /// expected degree no longer grows with block size.
  bool degree_balanced = false;

  /// Edge probability inside a block of `class_size` nodes.
  double intra_prob(int class_size) const;

  /// Throws GraphError when proportions do not sum to one or probabilities are
  /// out of order.
  void validate() const;
};

enum class GraphFormat { EdgeListCsv, JsonBundle };

/// Reads a graph from disk.
///
/// EdgeListCsv: `path` is a directory holding `edges.txt` (two whitespace
/// separated 0-based ids per line, `#` comments allowed) and `features.csv`
/// (header `f0,...,f{d-1},label`, one row per node). JsonBundle: `path` is a
/// JSON file with keys num_nodes, edges, features, labels, num_classes.
Graph load_graph(const std::filesystem::path& path, GraphFormat format);
/// Picks the format from the path: `.json` files are bundles, anything else an
/// edge-list directory.
Graph load_graph(const std::filesystem::path& path);

void save_edge_list_csv(const Graph& g, const std::filesystem::path& dir);
void save_json_bundle(const Graph& g, const std::filesystem::path& file);

/// Largest-remainder apportionment of `total` items over `proportions`.
std::vector<int> apportion(const std::vector<double>& proportions, int total);

Graph generate_sbm(const SbmConfig& config, std::uint64_t seed);

/// D^-1/2 (A + I) D^-1/2 where D is the degree matrix of A + I.
SparseMatrix normalized_adjacency(const Graph& g);

struct PageRankResult {
  Vector scores;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration for s = d * A D^-1 s + (1 - d) / N. Dangling nodes spread
/// their mass uniformly. Stops when the L1 change falls below `tol`.
PageRankResult pagerank(const Graph& g, double damping = 0.85, double tol = 1e-8,
                        int max_iter = 100);

DataSplit make_split(const Graph& g, std::uint64_t seed, int valid_size, int test_size);

/// min(counts) / max(counts); 1 when every count is equal (including all zero).
double imbalance_ratio(const std::vector<int>& class_counts);

}  // namespace gcbr
