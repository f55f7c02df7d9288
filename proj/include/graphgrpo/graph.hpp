#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "graphgrpo/categorical.hpp"

namespace graphgrpo {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Label-set sizes. Edge label 0 means "no edge".
struct LabelSpace {
  int node_classes = 1;
  int edge_classes = 2;

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;
};

inline constexpr Label kNoEdge = 0;

// Undirected graph with categorical node and edge labels. Edges are stored
// once, for the upper triangle in row-major pair order (0,1), (0,2), ...,
// (0,n-1), (1,2), ... and mirrored on access.
class GraphState {
 public:
  GraphState() = default;
  explicit GraphState(int num_nodes);
  GraphState(std::vector<Label> node_labels, std::vector<Label> edge_labels);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_pairs() const { return static_cast<int>(edges_.size()); }
  // Number of categorical dimensions: nodes followed by upper-triangle pairs.
  int num_dims() const { return num_nodes() + num_pairs(); }

  Label node(int i) const { return nodes_[i]; }
  Label edge(int i, int j) const;
  void set_node(int i, Label label) { nodes_[i] = label; }
  void set_edge(int i, int j, Label label);

  // Dimension d < n is node d, otherwise pair d - n.
  Label dim(int d) const;
  void set_dim(int d, Label label);

  std::span<const Label> node_labels() const { return nodes_; }
  std::span<const Label> edge_labels() const { return edges_; }

  int num_edges() const;
  std::vector<std::vector<int>> adjacency() const;
  std::vector<int> degrees() const;

  // Result has node perm[i] carrying old node i's label (and edges).
  GraphState permuted(std::span<const int> perm) const;

  // Throws std::invalid_argument when a label lies outside `labels`.
  void validate(const LabelSpace& labels) const;

  static int pair_count(int n) { return n * (n - 1) / 2; }
  // Index of pair (i, j), i != j, in the upper-triangle order.
  static int pair_index(int i, int j, int n);
  // Inverse of pair_index.
  static std::pair<int, int> pair_nodes(int index, int n);

  friend bool operator==(const GraphState&, const GraphState&) = default;

 private:
  std::vector<Label> nodes_;
  std::vector<Label> edges_;
};

// Per-dimension predicted distributions p_theta(. | G_t), factorized over
// nodes and upper-triangle pairs. Row r of node_probs is node r; row r of
// edge_probs is pair r.
struct GraphDistribution {
  RowMatrix node_probs;
  RowMatrix edge_probs;

  int num_nodes() const { return static_cast<int>(node_probs.rows()); }
  int num_pairs() const { return static_cast<int>(edge_probs.rows()); }
  std::span<const double> node_row(int i) const {
    return {node_probs.data() + i * node_probs.cols(),
            static_cast<std::size_t>(node_probs.cols())};
  }
  std::span<const double> edge_row(int p) const {
    return {edge_probs.data() + p * edge_probs.cols(),
            static_cast<std::size_t>(edge_probs.cols())};
  }
};

// Sum of per-dimension log-probabilities; -infinity when any realized label
// has zero probability.
double graph_log_prob(const GraphDistribution& dist, const GraphState& g);

// Noise distributions: node labels, edge labels and node counts
// (size[n] = P(N = n)).
struct GraphPriors {
  CategoricalDistribution node;
  CategoricalDistribution edge;
  CategoricalDistribution size;

  LabelSpace labels() const { return {node.size(), edge.size()}; }
};

// Empirical priors of a dataset. Label priors are floored for full support;
// the size histogram spans 0..max size seen.
GraphPriors empirical_priors(std::span<const GraphState> graphs,
                             const LabelSpace& labels);

}  // namespace graphgrpo
