#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "graphgrpo/graph.hpp"
#include "graphgrpo/random.hpp"

namespace testutil {

inline graphgrpo::GraphState path_graph(int n) {
  graphgrpo::GraphState g(n);
  for (int i = 0; i + 1 < n; ++i) g.set_edge(i, i + 1, 1);
  return g;
}

inline graphgrpo::GraphState complete_graph(int n) {
  graphgrpo::GraphState g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.set_edge(i, j, 1);
  return g;
}

inline graphgrpo::GraphState from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  graphgrpo::GraphState g(n);
  for (auto [a, b] : edges) g.set_edge(a, b, 1);
  return g;
}

// Erdos-Renyi graph with edge label 1 and node label 0.
inline graphgrpo::GraphState random_graph(int n, double p, graphgrpo::RandomStream& rng) {
  graphgrpo::GraphState g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) g.set_edge(i, j, 1);
  return g;
}

inline std::vector<int> random_permutation(int n, graphgrpo::RandomStream& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  return perm;
}

inline std::vector<double> random_simplex(int s, graphgrpo::RandomStream& rng, double lo = 0.05) {
  std::vector<double> p(s);
  double sum = 0.0;
  for (double& x : p) {
    x = lo + rng.uniform();
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

}  // namespace testutil
