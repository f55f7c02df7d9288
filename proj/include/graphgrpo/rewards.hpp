#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graphgrpo/graph.hpp"
#include "graphgrpo/random.hpp"

namespace graphgrpo {

// Any nonzero pair label counts as an edge.
bool is_connected(const GraphState& g);
bool is_tree(const GraphState& g);
// Planarity of the underlying simple graph.
bool is_planar(const GraphState& g);
// Validity predicate of the planar task: connected and planar.
bool is_connected_planar(const GraphState& g);
// Number of edges on the longest simple path (the diameter, for trees).
// Exact for forests; general graphs use an exhaustive search (n <= 16).
int longest_path_edges(const GraphState& g);

enum class Statistic { kDegree, kClustering, kTriangles };
const char* statistic_name(Statistic s);
Statistic parse_statistic(const std::string& name);

inline constexpr int kClusteringBins = 20;

// Normalized histogram of one per-node statistic. Degree and triangle counts
// use integer support 0..max; clustering uses 20 equal bins on [0, 1].
std::vector<double> node_histogram(const GraphState& g, Statistic s);
std::vector<double> pooled_histogram(std::span<const GraphState> graphs, Statistic s);

// 1-Wasserstein distance between two histograms on the statistic's support
// (unit spacing for counts, 1/20 for clustering). Shorter inputs are padded
// with zeros.
double histogram_w1(std::span<const double> a, std::span<const double> b, Statistic s);

// Reference histograms pooled over a training set.
struct StructuralReference {
  std::vector<Statistic> stats;
  std::vector<std::vector<double>> histograms;
};
StructuralReference build_reference(std::span<const GraphState> graphs,
                                    std::vector<Statistic> stats);

// S_k = exp(-W1(g, reference)) for every statistic, in reference order.
std::vector<double> structural_scores(const GraphState& g, const StructuralReference& ref);

enum class Validity { kTree, kPlanar, kTreeWithPath };

struct RewardSpec {
  std::string name;
  Validity validity = Validity::kTree;
  double alpha = 0.65;
  // Minimum longest-path length (edges) for kTreeWithPath.
  int path_edges = 6;
  StructuralReference reference;

  void validate() const;
  bool valid(const GraphState& g) const;
};

// I(G) * (alpha + (1 - alpha) * mean_k S_k).
double composite_reward(const GraphState& g, const RewardSpec& spec);

// Registry: "tree", "planar", and "tree-path<L>" (tree whose longest path
// has at least L edges). Statistics default to {deg, clus, orb}.
RewardSpec make_reward_spec(const std::string& name, std::span<const GraphState> reference,
                            double alpha = 0.65,
                            std::vector<Statistic> stats = {Statistic::kDegree,
                                                            Statistic::kClustering,
                                                            Statistic::kTriangles});
bool is_known_reward(const std::string& name);

using RewardFn = std::function<double(const GraphState&)>;

// Counts every reward evaluation; the count is the oracle-call budget.
class CountingOracle {
 public:
  explicit CountingOracle(RewardFn fn) : fn_(std::move(fn)) {}
  double operator()(const GraphState& g) {
    ++calls_;
    return fn_(g);
  }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  RewardFn fn_;
  std::atomic<std::uint64_t> calls_{0};
};

enum class DatasetKind { kTree, kPlanar };

// Trees from uniform Prufer sequences; planar graphs from the Delaunay
// triangulation of uniform points in the unit square, with each edge dropped
// with probability `thin` while the graph stays connected.
GraphState random_tree(int n, RandomStream& rng);
GraphState random_planar(int n, RandomStream& rng, double thin = 0.2);
std::vector<GraphState> synthesize_dataset(DatasetKind kind, int n, int count,
                                           RandomStream& rng);

struct SampleMetrics {
  double valid = 0.0;
  double unique = 0.0;
  double novel = 0.0;
  double vun = 0.0;
  double ratio = 0.0;
  // Statistics that entered the ratio (those with a nonzero held-out
  // baseline distance).
  int ratio_terms = 0;
};

// valid/unique/novel are fractions of `samples`. A sample counts towards vun
// when it is valid, novel, and the first sample with its canonical key.
// ratio = mean_k W1(samples, train) / W1(heldout, train) over statistics whose
// baseline exceeds 1e-9.
SampleMetrics vun_ratio_metrics(std::span<const GraphState> samples,
                                std::span<const GraphState> train,
                                std::span<const GraphState> heldout,
                                const std::function<bool(const GraphState&)>& valid,
                                std::span<const Statistic> stats);

}  // namespace graphgrpo
