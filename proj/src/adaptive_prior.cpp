#include "graphgrpo/adaptive_prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "graphgrpo/canonical.hpp"

namespace graphgrpo {
namespace {

bool entry_before(const RewardBuffer::Entry& a, const RewardBuffer::Entry& b) {
  if (a.reward != b.reward) return a.reward > b.reward;
  return a.key < b.key;
}

GraphState canonical_form(const GraphState& g) {
  if (g.num_nodes() > kExactCanonicalMaxNodes) return g;
  return g.permuted(canonical_permutation(g));
}

std::vector<double> blend(std::span<const double> current, std::span<const double> target,
                          double a) {
  const std::size_t len = std::max(current.size(), target.size());
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    const double c = i < current.size() ? current[i] : 0.0;
    const double t = i < target.size() ? target[i] : 0.0;
    out[i] = (1.0 - a) * c + a * t;
  }
  return out;
}

}  // namespace

RewardBuffer::RewardBuffer(std::size_t capacity, double min_reward)
    : capacity_(capacity), min_reward_(min_reward) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
}

std::size_t RewardBuffer::merge(std::span<const ScoredGraph> candidates) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < entries_.size(); ++i) index.emplace(entries_[i].key, i);
  std::size_t changed = 0;
  for (const auto& c : candidates) {
    if (!std::isfinite(c.reward)) throw std::invalid_argument("buffer rewards must be finite");
    if (c.reward <= min_reward_) continue;
    std::string key = canonical_key(c.graph);
    auto it = index.find(key);
    if (it != index.end()) {
      if (c.reward > entries_[it->second].reward) {
        entries_[it->second].reward = c.reward;
        ++changed;
      }
      continue;
    }
    index.emplace(key, entries_.size());
    entries_.push_back({canonical_form(c.graph), c.reward, std::move(key)});
    ++changed;
  }
  std::sort(entries_.begin(), entries_.end(), entry_before);
  if (entries_.size() > capacity_) entries_.resize(capacity_);
  return changed;
}

double RewardBuffer::mean_reward() const {
  if (entries_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : entries_) s += e.reward;
  return s / static_cast<double>(entries_.size());
}

BufferHistograms buffer_histograms(const RewardBuffer& buffer, const LabelSpace& labels) {
  BufferHistograms h;
  h.node.assign(labels.node_classes, 0.0);
  h.edge.assign(labels.edge_classes, 0.0);
  double nodes = 0.0, pairs = 0.0;
  for (const auto& e : buffer.entries()) {
    const GraphState& g = e.graph;
    for (Label x : g.node_labels()) h.node.at(x) += 1.0;
    for (Label x : g.edge_labels()) h.edge.at(x) += 1.0;
    nodes += g.num_nodes();
    pairs += g.num_pairs();
    if (g.num_nodes() >= static_cast<int>(h.size.size())) h.size.resize(g.num_nodes() + 1, 0.0);
    h.size[g.num_nodes()] += 1.0;
  }
  const double graphs = static_cast<double>(buffer.size());
  for (double& v : h.node) v = nodes > 0 ? v / nodes : 0.0;
  for (double& v : h.edge) v = pairs > 0 ? v / pairs : 0.0;
  for (double& v : h.size) v = graphs > 0 ? v / graphs : 0.0;
  return h;
}

AdaptivePriors::AdaptivePriors(GraphPriors initial, AdaptivePriorConfig config)
    : priors_(std::move(initial)), config_(config) {
  if (!(config_.momentum >= 0.0 && config_.momentum <= 1.0)) {
    throw std::invalid_argument("prior momentum must lie in [0, 1]");
  }
}

void AdaptivePriors::ema_update(const RewardBuffer& buffer) {
  if (buffer.empty()) return;
  const double a = config_.momentum;
  const BufferHistograms h = buffer_histograms(buffer, priors_.labels());
  // Pairs exist only for n >= 2; keep the edge prior when the buffer has none.
  const bool has_pairs =
      std::any_of(h.edge.begin(), h.edge.end(), [](double v) { return v > 0.0; });
  const bool has_nodes =
      std::any_of(h.node.begin(), h.node.end(), [](double v) { return v > 0.0; });
  if (has_nodes) {
    priors_.node =
        CategoricalDistribution::from_weights(blend(priors_.node.probs(), h.node, a))
            .with_floor();
  }
  if (has_pairs) {
    priors_.edge =
        CategoricalDistribution::from_weights(blend(priors_.edge.probs(), h.edge, a))
            .with_floor();
  }
  priors_.size = CategoricalDistribution::from_weights(blend(priors_.size.probs(), h.size, a));
  ++updates_;
}

bool AdaptivePriors::maybe_update(const RewardBuffer& buffer, double improvement) {
  if (!(improvement > config_.trigger)) return false;
  ema_update(buffer);
  return true;
}

}  // namespace graphgrpo
