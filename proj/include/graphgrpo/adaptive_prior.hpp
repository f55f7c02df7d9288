#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphgrpo/graph.hpp"

namespace graphgrpo {

struct ScoredGraph {
  GraphState graph;
  double reward = 0.0;
};

// Top-capacity unique graphs by reward. Entries are ordered by reward
// (descending) then canonical key, and graphs with n <= 16 are stored in
// canonical node order, so the contents depend only on the multiset of
// candidates ever offered.
class RewardBuffer {
 public:
  explicit RewardBuffer(std::size_t capacity = 1000, double min_reward = 0.0);

  // Candidates at or below min_reward are ignored. Returns how many entries
  // changed.
  std::size_t merge(std::span<const ScoredGraph> candidates);

  struct Entry {
    GraphState graph;
    double reward;
    std::string key;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  double mean_reward() const;

 private:
  std::size_t capacity_;
  double min_reward_;
  std::vector<Entry> entries_;
};

struct AdaptivePriorConfig {
  double momentum = 0.05;
  double trigger = 0.001;
};

// Priors adapted from a reward buffer by exponential moving average.
class AdaptivePriors {
 public:
  AdaptivePriors(GraphPriors initial, AdaptivePriorConfig config = {});

  const GraphPriors& priors() const { return priors_; }
  const AdaptivePriorConfig& config() const { return config_; }

  // p <- (1 - a) p + a p_hat for the node, edge and size histograms of the
  // buffer. Node and edge priors keep the 1e-6 floor; the size distribution is
  // only renormalized and grows to cover larger buffered graphs. No-op on an
  // empty buffer.
  void ema_update(const RewardBuffer& buffer);

  // Updates iff improvement > trigger (strict). Returns whether it did.
  bool maybe_update(const RewardBuffer& buffer, double improvement);

  int updates() const { return updates_; }

 private:
  GraphPriors priors_;
  AdaptivePriorConfig config_;
  int updates_ = 0;
};

// Buffer histograms: node labels, pair labels (absent edges included), sizes.
struct BufferHistograms {
  std::vector<double> node;
  std::vector<double> edge;
  std::vector<double> size;
};
BufferHistograms buffer_histograms(const RewardBuffer& buffer, const LabelSpace& labels);

}  // namespace graphgrpo
