#include "graphgrpo/canonical.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace graphgrpo {
namespace {

using Signature = std::vector<int>;

// One refinement round. Returns the new colours and appends the sorted
// distinct signatures to `history` when given.
std::vector<int> refine_once(const GraphState& g, const std::vector<int>& colour,
                             std::string* history) {
  const int n = g.num_nodes();
  std::vector<Signature> sig(n);
  for (int v = 0; v < n; ++v) {
    std::vector<int> neigh;
    for (int u = 0; u < n; ++u) {
      const Label e = g.edge(v, u);
      if (u != v && e != kNoEdge) neigh.push_back(e * (n + 1) + colour[u]);
    }
    std::sort(neigh.begin(), neigh.end());
    sig[v].reserve(neigh.size() + 1);
    sig[v].push_back(colour[v]);
    sig[v].insert(sig[v].end(), neigh.begin(), neigh.end());
  }
  std::vector<Signature> distinct(sig);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> next(n);
  for (int v = 0; v < n; ++v) {
    next[v] = static_cast<int>(
        std::lower_bound(distinct.begin(), distinct.end(), sig[v]) - distinct.begin());
  }
  if (history != nullptr) {
    std::vector<Signature> all(sig);
    std::sort(all.begin(), all.end());
    for (const auto& s : all) {
      history->push_back('(');
      for (int x : s) history->append(std::to_string(x)).push_back(',');
      history->push_back(')');
    }
    history->push_back('|');
  }
  return next;
}

int count_distinct(std::vector<int> c) {
  std::sort(c.begin(), c.end());
  return static_cast<int>(std::unique(c.begin(), c.end()) - c.begin());
}

std::vector<int> stable_colouring(const GraphState& g, std::string* history) {
  const int n = g.num_nodes();
  // initial colours: rank of the node label
  std::vector<int> colour(n);
  {
    std::vector<int> labels(g.node_labels().begin(), g.node_labels().end());
    std::vector<int> distinct(labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int v = 0; v < n; ++v) {
      colour[v] = static_cast<int>(
          std::lower_bound(distinct.begin(), distinct.end(), labels[v]) - distinct.begin());
    }
    if (history != nullptr) {
      for (int x : distinct) history->append(std::to_string(x)).push_back(',');
      history->push_back('|');
    }
  }
  int classes = count_distinct(colour);
  for (int round = 0; round < n; ++round) {
    std::vector<int> next = refine_once(g, colour, history);
    const int next_classes = count_distinct(next);
    colour = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return colour;
}

class CanonicalSearch {
 public:
  explicit CanonicalSearch(const GraphState& g) : g_(g), n_(g.num_nodes()) {
    colour_ = stable_colouring(g, nullptr);
    slot_colour_ = colour_;
    std::sort(slot_colour_.begin(), slot_colour_.end());
    twin_.assign(n_ * n_, false);
    for (int u = 0; u < n_; ++u) {
      for (int v = u + 1; v < n_; ++v) {
        bool twins = g.node(u) == g.node(v) && colour_[u] == colour_[v];
        for (int w = 0; twins && w < n_; ++w) {
          if (w != u && w != v && g.edge(u, w) != g.edge(v, w)) twins = false;
        }
        twin_[u * n_ + v] = twin_[v * n_ + u] = twins;
      }
    }
    placed_.assign(n_, false);
    order_.reserve(n_);
  }

  std::vector<int> run() {
    search(0);
    return best_order_;
  }

 private:
  // Current serialization of the pairs among the first k placed nodes,
  // column by column.
  void search(int depth) {
    if (depth == n_) {
      if (!has_best_ || current_ < best_) {
        best_ = current_;
        best_order_ = order_;
        has_best_ = true;
      }
      return;
    }
    std::vector<int> tried;
    for (int v = 0; v < n_; ++v) {
      if (placed_[v] || colour_[v] != slot_colour_[depth]) continue;
      bool redundant = false;
      for (int u : tried) redundant = redundant || twin_[u * n_ + v];
      if (redundant) continue;
      tried.push_back(v);

      const std::size_t mark = current_.size();
      for (int k = 0; k < depth; ++k) {
        current_.push_back(static_cast<char>(g_.edge(order_[k], v)));
      }
      if (has_best_ && best_.compare(0, current_.size(), current_) < 0) {
        current_.resize(mark);
        continue;  // strictly worse than the best prefix
      }
      placed_[v] = true;
      order_.push_back(v);
      search(depth + 1);
      order_.pop_back();
      placed_[v] = false;
      current_.resize(mark);
    }
  }

  const GraphState& g_;
  int n_;
  std::vector<int> colour_;
  std::vector<int> slot_colour_;
  std::vector<bool> twin_;
  std::vector<bool> placed_;
  std::vector<int> order_;
  std::string current_;
  std::string best_;
  std::vector<int> best_order_;
  bool has_best_ = false;
};

void check_label_width(const GraphState& g) {
  for (Label x : g.node_labels()) {
    if (x < 0 || x > 255) throw std::invalid_argument("canonical_key: label exceeds one byte");
  }
  for (Label e : g.edge_labels()) {
    if (e < 0 || e > 255) throw std::invalid_argument("canonical_key: label exceeds one byte");
  }
}

}  // namespace

std::vector<int> canonical_permutation(const GraphState& g) {
  if (g.num_nodes() > kExactCanonicalMaxNodes) {
    throw std::invalid_argument("canonical_permutation: graph too large");
  }
  const std::vector<int> order = CanonicalSearch(g).run();
  std::vector<int> perm(g.num_nodes());
  for (int pos = 0; pos < g.num_nodes(); ++pos) perm[order[pos]] = pos;
  return perm;
}

std::string canonical_key(const GraphState& g) {
  check_label_width(g);
  const int n = g.num_nodes();
  std::string key;
  if (n > kExactCanonicalMaxNodes) {
    key = "W" + std::to_string(n) + ":";
    stable_colouring(g, &key);
    // pair-label and colour multiset of every edge closes obvious gaps
    const std::vector<int> colour = stable_colouring(g, nullptr);
    std::vector<std::array<int, 3>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Label e = g.edge(i, j);
        if (e != kNoEdge) {
          edges.push_back({e, std::min(colour[i], colour[j]), std::max(colour[i], colour[j])});
        }
      }
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& e : edges) {
      key.append(std::to_string(e[0])).push_back('.');
      key.append(std::to_string(e[1])).push_back('.');
      key.append(std::to_string(e[2])).push_back(';');
    }
    return key;
  }
  const std::vector<int> order = CanonicalSearch(g).run();
  key.push_back('C');
  key.push_back(static_cast<char>(n));
  for (int v : order) key.push_back(static_cast<char>(g.node(v)));
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < j; ++i) key.push_back(static_cast<char>(g.edge(order[i], order[j])));
  }
  return key;
}

}  // namespace graphgrpo
