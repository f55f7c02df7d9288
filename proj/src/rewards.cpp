#include "graphgrpo/rewards.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "graphgrpo/canonical.hpp"
#include "graphgrpo/planarity.hpp"

namespace graphgrpo {
namespace {

// Component labels; returns the number of components.
int components(const std::vector<std::vector<int>>& adj, std::vector<int>& comp) {
  const int n = static_cast<int>(adj.size());
  comp.assign(n, -1);
  int count = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (comp[w] < 0) {
          comp[w] = count;
          stack.push_back(w);
        }
      }
    }
    ++count;
  }
  return count;
}

std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  std::queue<int> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

int longest_simple_path_from(const std::vector<std::vector<int>>& adj, int v,
                             std::uint32_t visited) {
  int best = 0;
  for (int w : adj[v]) {
    if (visited & (1u << w)) continue;
    best = std::max(best, 1 + longest_simple_path_from(adj, w, visited | (1u << w)));
  }
  return best;
}

std::vector<int> triangle_counts(const GraphState& g) {
  const int n = g.num_nodes();
  std::vector<int> tri(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (g.edge(i, j) == kNoEdge) continue;
      for (int k = j + 1; k < n; ++k) {
        if (g.edge(i, k) != kNoEdge && g.edge(j, k) != kNoEdge) {
          ++tri[i];
          ++tri[j];
          ++tri[k];
        }
      }
    }
  }
  return tri;
}

// Per-node value mapped to its histogram bin.
std::vector<int> node_bins(const GraphState& g, Statistic s) {
  const int n = g.num_nodes();
  std::vector<int> bins(n, 0);
  switch (s) {
    case Statistic::kDegree:
      return g.degrees();
    case Statistic::kTriangles:
      return triangle_counts(g);
    case Statistic::kClustering: {
      const auto deg = g.degrees();
      const auto tri = triangle_counts(g);
      for (int i = 0; i < n; ++i) {
        double c = 0.0;
        if (deg[i] >= 2) c = 2.0 * tri[i] / (static_cast<double>(deg[i]) * (deg[i] - 1));
        bins[i] = std::min(kClusteringBins - 1, static_cast<int>(c * kClusteringBins));
      }
      return bins;
    }
  }
  return bins;
}

void add_counts(const GraphState& g, Statistic s, std::vector<double>& counts) {
  for (int b : node_bins(g, s)) {
    if (b >= static_cast<int>(counts.size())) counts.resize(b + 1, 0.0);
    counts[b] += 1.0;
  }
}

void normalize(std::vector<double>& h) {
  double total = 0.0;
  for (double v : h) total += v;
  if (total > 0.0) {
    for (double& v : h) v /= total;
  }
}

double bin_width(Statistic s) {
  return s == Statistic::kClustering ? 1.0 / kClusteringBins : 1.0;
}

}  // namespace

bool is_connected(const GraphState& g) {
  if (g.num_nodes() == 0) return true;
  std::vector<int> comp;
  return components(g.adjacency(), comp) == 1;
}

bool is_tree(const GraphState& g) {
  return g.num_nodes() >= 1 && g.num_edges() == g.num_nodes() - 1 && is_connected(g);
}

bool is_planar(const GraphState& g) { return is_planar_adjacency(g.adjacency()); }

bool is_connected_planar(const GraphState& g) { return is_connected(g) && is_planar(g); }

int longest_path_edges(const GraphState& g) {
  const int n = g.num_nodes();
  if (n == 0) return 0;
  const auto adj = g.adjacency();
  std::vector<int> comp;
  const int c = components(adj, comp);
  if (g.num_edges() == n - c) {
    // Forest: two sweeps per component.
    std::vector<bool> done(c, false);
    int best = 0;
    for (int s = 0; s < n; ++s) {
      if (done[comp[s]]) continue;
      done[comp[s]] = true;
      const auto d1 = bfs_distances(adj, s);
      const int far = static_cast<int>(std::max_element(d1.begin(), d1.end()) - d1.begin());
      const auto d2 = bfs_distances(adj, far);
      best = std::max(best, *std::max_element(d2.begin(), d2.end()));
    }
    return best;
  }
  if (n > 16) throw std::invalid_argument("longest path on cyclic graphs needs n <= 16");
  int best = 0;
  for (int s = 0; s < n; ++s) best = std::max(best, longest_simple_path_from(adj, s, 1u << s));
  return best;
}

const char* statistic_name(Statistic s) {
  switch (s) {
    case Statistic::kDegree:
      return "deg";
    case Statistic::kClustering:
      return "clus";
    case Statistic::kTriangles:
      return "orb";
  }
  return "?";
}

Statistic parse_statistic(const std::string& name) {
  if (name == "deg") return Statistic::kDegree;
  if (name == "clus") return Statistic::kClustering;
  if (name == "orb") return Statistic::kTriangles;
  throw std::invalid_argument("unknown statistic '" + name + "'");
}

std::vector<double> node_histogram(const GraphState& g, Statistic s) {
  std::vector<double> h(s == Statistic::kClustering ? kClusteringBins : 1, 0.0);
  add_counts(g, s, h);
  normalize(h);
  return h;
}

std::vector<double> pooled_histogram(std::span<const GraphState> graphs, Statistic s) {
  std::vector<double> h(s == Statistic::kClustering ? kClusteringBins : 1, 0.0);
  for (const auto& g : graphs) add_counts(g, s, h);
  normalize(h);
  return h;
}

double histogram_w1(std::span<const double> a, std::span<const double> b, Statistic s) {
  const std::size_t len = std::max(a.size(), b.size());
  double ca = 0.0;
  double cb = 0.0;
  double dist = 0.0;
  // The last CDF difference is zero for two normalized histograms.
  for (std::size_t i = 0; i + 1 < len; ++i) {
    ca += i < a.size() ? a[i] : 0.0;
    cb += i < b.size() ? b[i] : 0.0;
    dist += std::abs(ca - cb);
  }
  return dist * bin_width(s);
}

StructuralReference build_reference(std::span<const GraphState> graphs,
                                    std::vector<Statistic> stats) {
  StructuralReference ref;
  ref.stats = std::move(stats);
  for (Statistic s : ref.stats) ref.histograms.push_back(pooled_histogram(graphs, s));
  return ref;
}

std::vector<double> structural_scores(const GraphState& g, const StructuralReference& ref) {
  std::vector<double> out;
  out.reserve(ref.stats.size());
  for (std::size_t k = 0; k < ref.stats.size(); ++k) {
    const auto h = node_histogram(g, ref.stats[k]);
    out.push_back(std::exp(-histogram_w1(h, ref.histograms[k], ref.stats[k])));
  }
  return out;
}

void RewardSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (reference.stats.size() != reference.histograms.size()) {
    throw std::invalid_argument("reference statistics and histograms disagree");
  }
  if (validity == Validity::kTreeWithPath && path_edges < 0) {
    throw std::invalid_argument("path length must be non-negative");
  }
}

bool RewardSpec::valid(const GraphState& g) const {
  switch (validity) {
    case Validity::kTree:
      return is_tree(g);
    case Validity::kPlanar:
      return is_connected_planar(g);
    case Validity::kTreeWithPath:
      return is_tree(g) && longest_path_edges(g) >= path_edges;
  }
  return false;
}

double composite_reward(const GraphState& g, const RewardSpec& spec) {
  if (!spec.valid(g)) return 0.0;
  if (spec.reference.stats.empty()) return 1.0;
  const auto scores = structural_scores(g, spec.reference);
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  return spec.alpha + (1.0 - spec.alpha) * mean;
}

namespace {

bool parse_path_task(const std::string& name, int& length) {
  const std::string prefix = "tree-path";
  if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) return false;
  const std::string digits = name.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  if (digits.size() > 4) return false;
  length = std::stoi(digits);
  return true;
}

}  // namespace

bool is_known_reward(const std::string& name) {
  int length = 0;
  return name == "tree" || name == "planar" || parse_path_task(name, length);
}

RewardSpec make_reward_spec(const std::string& name, std::span<const GraphState> reference,
                            double alpha, std::vector<Statistic> stats) {
  RewardSpec spec;
  spec.name = name;
  spec.alpha = alpha;
  int length = 0;
  if (name == "tree") {
    spec.validity = Validity::kTree;
  } else if (name == "planar") {
    spec.validity = Validity::kPlanar;
  } else if (parse_path_task(name, length)) {
    spec.validity = Validity::kTreeWithPath;
    spec.path_edges = length;
  } else {
    throw std::invalid_argument("unknown reward '" + name + "'");
  }
  spec.reference = build_reference(reference, std::move(stats));
  spec.validate();
  return spec;
}

GraphState random_tree(int n, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("tree needs at least one node");
  GraphState g(n);
  if (n == 1) return g;
  if (n == 2) {
    g.set_edge(0, 1, 1);
    return g;
  }
  std::vector<int> code(n - 2);
  for (int& c : code) c = static_cast<int>(rng.uniform_index(n));
  std::vector<int> degree(n, 1);
  for (int c : code) ++degree[c];
  // Leaves in increasing order; a min-heap keeps the decoding O(n log n).
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < n; ++v) {
    if (degree[v] == 1) leaves.push(v);
  }
  for (int c : code) {
    const int leaf = leaves.top();
    leaves.pop();
    g.set_edge(leaf, c, 1);
    if (--degree[c] == 1) leaves.push(c);
  }
  const int a = leaves.top();
  leaves.pop();
  g.set_edge(a, leaves.top(), 1);
  return g;
}

namespace {

struct Point {
  double x;
  double y;
};

// Brute-force Delaunay: a triangle is kept when no other point lies strictly
// inside its circumcircle.
std::vector<std::pair<int, int>> delaunay_edges(const std::vector<Point>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        const Point a = pts[i], b = pts[j], c = pts[k];
        const double orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (std::abs(orient) < 1e-12) continue;
        bool empty = true;
        for (int l = 0; l < n && empty; ++l) {
          if (l == i || l == j || l == k) continue;
          const Point d = pts[l];
          const double ax = a.x - d.x, ay = a.y - d.y;
          const double bx = b.x - d.x, by = b.y - d.y;
          const double cx = c.x - d.x, cy = c.y - d.y;
          const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                             (bx * bx + by * by) * (ax * cy - cx * ay) +
                             (cx * cx + cy * cy) * (ax * by - bx * ay);
          if ((orient > 0 ? det : -det) > 1e-12) empty = false;
        }
        if (empty) edge[i][j] = edge[j][k] = edge[i][k] = true;
      }
    }
  }
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge[i][j]) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace

GraphState random_planar(int n, RandomStream& rng, double thin) {
  if (n < 1) throw std::invalid_argument("planar graph needs at least one node");
  if (n > 16) throw std::invalid_argument("planar synthesis supports n <= 16");
  for (;;) {
    std::vector<Point> pts(n);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    GraphState g(n);
    if (n == 2) g.set_edge(0, 1, 1);
    for (auto [i, j] : delaunay_edges(pts)) g.set_edge(i, j, 1);
    // Collinear point sets leave nodes isolated; draw again.
    if (!is_connected(g) || !is_planar(g)) continue;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (g.edge(i, j) != kNoEdge) edges.emplace_back(i, j);
      }
    }
    for (std::size_t k = edges.size(); k > 1; --k) {
      std::swap(edges[k - 1], edges[rng.uniform_index(k)]);
    }
    for (auto [i, j] : edges) {
      if (rng.uniform() >= thin) continue;
      g.set_edge(i, j, kNoEdge);
      if (!is_connected(g)) g.set_edge(i, j, 1);
    }
    return g;
  }
}

std::vector<GraphState> synthesize_dataset(DatasetKind kind, int n, int count,
                                           RandomStream& rng) {
  std::vector<GraphState> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    RandomStream child = rng.split(static_cast<std::uint64_t>(i));
    out.push_back(kind == DatasetKind::kTree ? random_tree(n, child) : random_planar(n, child));
  }
  return out;
}

SampleMetrics vun_ratio_metrics(std::span<const GraphState> samples,
                                std::span<const GraphState> train,
                                std::span<const GraphState> heldout,
                                const std::function<bool(const GraphState&)>& valid,
                                std::span<const Statistic> stats) {
  if (samples.empty()) throw std::invalid_argument("metrics need at least one sample");
  std::unordered_set<std::string> train_keys;
  for (const auto& g : train) train_keys.insert(canonical_key(g));
  std::unordered_set<std::string> seen;
  int n_valid = 0, n_novel = 0, n_vun = 0;
  for (const auto& g : samples) {
    const std::string key = canonical_key(g);
    const bool is_valid = valid(g);
    const bool is_novel = !train_keys.contains(key);
    const bool first = seen.insert(key).second;
    n_valid += is_valid;
    n_novel += is_novel;
    n_vun += is_valid && is_novel && first;
  }
  const double total = static_cast<double>(samples.size());
  SampleMetrics m;
  m.valid = n_valid / total;
  m.unique = static_cast<double>(seen.size()) / total;
  m.novel = n_novel / total;
  m.vun = n_vun / total;
  double ratio = 0.0;
  for (Statistic s : stats) {
    const auto h_train = pooled_histogram(train, s);
    const double base = histogram_w1(pooled_histogram(heldout, s), h_train, s);
    if (base <= 1e-9) continue;
    ratio += histogram_w1(pooled_histogram(samples, s), h_train, s) / base;
    ++m.ratio_terms;
  }
  m.ratio = m.ratio_terms > 0 ? ratio / m.ratio_terms : 0.0;
  return m;
}

}  // namespace graphgrpo
