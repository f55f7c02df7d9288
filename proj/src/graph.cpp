#include "graphgrpo/graph.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace graphgrpo {

GraphState::GraphState(int num_nodes)
    : nodes_(num_nodes, 0), edges_(pair_count(num_nodes), kNoEdge) {
  if (num_nodes < 0) throw std::invalid_argument("negative node count");
}

GraphState::GraphState(std::vector<Label> node_labels,
                       std::vector<Label> edge_labels)
    : nodes_(std::move(node_labels)), edges_(std::move(edge_labels)) {
  if (static_cast<int>(edges_.size()) != pair_count(num_nodes())) {
    throw std::invalid_argument("edge label count does not match node count");
  }
}

int GraphState::pair_index(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  // rows 0..i-1 hold (n-1) + (n-2) + ... + (n-i) pairs
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

std::pair<int, int> GraphState::pair_nodes(int index, int n) {
  int i = 0;
  int row = n - 1;
  while (index >= row) {
    index -= row;
    ++i;
    --row;
  }
  return {i, i + 1 + index};
}

Label GraphState::edge(int i, int j) const {
  if (i == j) return kNoEdge;
  return edges_[pair_index(i, j, num_nodes())];
}

void GraphState::set_edge(int i, int j, Label label) {
  if (i == j) throw std::invalid_argument("self loops are not representable");
  edges_[pair_index(i, j, num_nodes())] = label;
}

Label GraphState::dim(int d) const {
  return d < num_nodes() ? nodes_[d] : edges_[d - num_nodes()];
}

void GraphState::set_dim(int d, Label label) {
  if (d < num_nodes()) {
    nodes_[d] = label;
  } else {
    edges_[d - num_nodes()] = label;
  }
}

int GraphState::num_edges() const {
  int count = 0;
  for (Label e : edges_) count += e != kNoEdge ? 1 : 0;
  return count;
}

std::vector<std::vector<int>> GraphState::adjacency() const {
  const int n = num_nodes();
  std::vector<std::vector<int>> adj(n);
  int p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      if (edges_[p] != kNoEdge) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

std::vector<int> GraphState::degrees() const {
  const int n = num_nodes();
  std::vector<int> deg(n, 0);
  int p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      if (edges_[p] != kNoEdge) {
        ++deg[i];
        ++deg[j];
      }
    }
  }
  return deg;
}

GraphState GraphState::permuted(std::span<const int> perm) const {
  const int n = num_nodes();
  if (static_cast<int>(perm.size()) != n) {
    throw std::invalid_argument("permutation size does not match node count");
  }
  GraphState out(n);
  for (int i = 0; i < n; ++i) out.nodes_[perm[i]] = nodes_[i];
  int p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) out.set_edge(perm[i], perm[j], edges_[p]);
  }
  return out;
}

void GraphState::validate(const LabelSpace& labels) const {
  for (Label x : nodes_) {
    if (x < 0 || x >= labels.node_classes) {
      throw std::invalid_argument("node label out of range");
    }
  }
  for (Label e : edges_) {
    if (e < 0 || e >= labels.edge_classes) {
      throw std::invalid_argument("edge label out of range");
    }
  }
}

double graph_log_prob(const GraphDistribution& dist, const GraphState& g) {
  if (dist.num_nodes() != g.num_nodes() || dist.num_pairs() != g.num_pairs()) {
    throw std::invalid_argument("graph_log_prob: shape mismatch");
  }
  double total = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    const double p = dist.node_probs(i, g.node(i));
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(p);
  }
  const auto edges = g.edge_labels();
  for (int k = 0; k < g.num_pairs(); ++k) {
    const double p = dist.edge_probs(k, edges[k]);
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(p);
  }
  return total;
}

GraphPriors empirical_priors(std::span<const GraphState> graphs,
                             const LabelSpace& labels) {
  if (graphs.empty()) throw std::invalid_argument("empirical_priors: no graphs");
  std::vector<double> node(labels.node_classes, 0.0);
  std::vector<double> edge(labels.edge_classes, 0.0);
  int max_n = 0;
  for (const auto& g : graphs) max_n = std::max(max_n, g.num_nodes());
  std::vector<double> size(max_n + 1, 0.0);
  for (const auto& g : graphs) {
    g.validate(labels);
    for (Label x : g.node_labels()) node[x] += 1.0;
    for (Label e : g.edge_labels()) edge[e] += 1.0;
    size[g.num_nodes()] += 1.0;
  }
  // A dataset of single-node graphs has no pairs; fall back to uniform.
  bool any_edge_dim = false;
  for (double c : edge) any_edge_dim = any_edge_dim || c > 0.0;
  if (!any_edge_dim) edge.assign(labels.edge_classes, 1.0);
  return GraphPriors{CategoricalDistribution::from_weights(node).with_floor(),
                     CategoricalDistribution::from_weights(edge).with_floor(),
                     CategoricalDistribution::from_weights(size)};
}

}  // namespace graphgrpo
