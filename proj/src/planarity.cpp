#include "graphgrpo/planarity.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>

namespace graphgrpo {
namespace {

constexpr int kNone = -1;

struct Interval {
  int low = kNone;
  int high = kNone;
  bool empty() const { return low == kNone && high == kNone; }
};

struct ConflictPair {
  Interval left;
  Interval right;
  void swap() { std::swap(left, right); }
};

// Directed edges of the DFS orientation are numbered 0..m-1.
class LeftRight {
 public:
  explicit LeftRight(const std::vector<std::vector<int>>& adj) : adj_(adj) {
    const int n = static_cast<int>(adj.size());
    height_.assign(n, kNone);
    parent_edge_.assign(n, kNone);
    out_.assign(n, {});
    visited_.resize(n);
    for (int v = 0; v < n; ++v) visited_[v].assign(adj[v].size(), false);
  }

  bool run() {
    const int n = static_cast<int>(adj_.size());
    std::size_t m = 0;
    for (const auto& a : adj_) m += a.size();
    m /= 2;
    if (n > 2 && m > static_cast<std::size_t>(3 * n - 6)) return false;

    for (int v = 0; v < n; ++v) {
      if (height_[v] == kNone) {
        height_[v] = 0;
        roots_.push_back(v);
        orient(v);
      }
    }
    for (int v = 0; v < n; ++v) {
      std::sort(out_[v].begin(), out_[v].end(),
                [&](int a, int b) { return nesting_[a] < nesting_[b]; });
    }
    ref_.assign(src_.size(), kNone);
    lowpt_edge_.assign(src_.size(), kNone);
    stack_bottom_.assign(src_.size(), 0);
    for (int r : roots_) {
      if (!test(r)) return false;
    }
    return true;
  }

 private:
  int new_edge(int v, int w) {
    src_.push_back(v);
    dst_.push_back(w);
    lowpt_.push_back(0);
    lowpt2_.push_back(0);
    nesting_.push_back(0);
    return static_cast<int>(src_.size()) - 1;
  }

  void mark_visited(int v, std::size_t idx) {
    visited_[v][idx] = true;
    const int w = adj_[v][idx];
    const auto& back = adj_[w];
    for (std::size_t k = 0; k < back.size(); ++k) {
      if (back[k] == v) {
        visited_[w][k] = true;
        break;
      }
    }
  }

  void orient(int v) {
    const int e = parent_edge_[v];
    for (std::size_t idx = 0; idx < adj_[v].size(); ++idx) {
      if (visited_[v][idx]) continue;
      const int w = adj_[v][idx];
      mark_visited(v, idx);
      const int vw = new_edge(v, w);
      out_[v].push_back(vw);
      lowpt_[vw] = height_[v];
      lowpt2_[vw] = height_[v];
      if (height_[w] == kNone) {
        parent_edge_[w] = vw;
        height_[w] = height_[v] + 1;
        orient(w);
      } else {
        lowpt_[vw] = height_[w];
      }
      nesting_[vw] = 2 * lowpt_[vw];
      if (lowpt2_[vw] < height_[v]) nesting_[vw] += 1;
      if (e != kNone) {
        if (lowpt_[vw] < lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt_[e], lowpt2_[vw]);
          lowpt_[e] = lowpt_[vw];
        } else if (lowpt_[vw] > lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt_[vw]);
        } else {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt2_[vw]);
        }
      }
    }
  }

  bool conflicting(const Interval& i, int b) const {
    return !i.empty() && lowpt_[i.high] > lowpt_[b];
  }

  int lowest(const ConflictPair& p) const {
    if (p.left.empty()) return lowpt_[p.right.low];
    if (p.right.empty()) return lowpt_[p.left.low];
    return std::min(lowpt_[p.left.low], lowpt_[p.right.low]);
  }

  bool test(int v) {
    const int e = parent_edge_[v];
    for (std::size_t k = 0; k < out_[v].size(); ++k) {
      const int ei = out_[v][k];
      const int w = dst_[ei];
      stack_bottom_[ei] = stack_.size();
      if (ei == parent_edge_[w]) {
        if (!test(w)) return false;
      } else {
        lowpt_edge_[ei] = ei;
        ConflictPair p;
        p.right = Interval{ei, ei};
        stack_.push_back(p);
      }
      if (lowpt_[ei] < height_[v]) {
        if (k == 0) {
          lowpt_edge_[e] = lowpt_edge_[ei];
        } else if (!add_constraints(ei, e)) {
          return false;
        }
      }
    }
    if (e != kNone) remove_back_edges(e);
    return true;
  }

  bool add_constraints(int ei, int e) {
    ConflictPair p;
    do {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (!q.left.empty()) q.swap();
      if (!q.left.empty()) return false;
      if (lowpt_[q.right.low] > lowpt_[e]) {
        if (p.right.empty()) {
          p.right = q.right;
        } else {
          ref_[p.right.low] = q.right.high;
        }
        p.right.low = q.right.low;
      } else {
        ref_[q.right.low] = lowpt_edge_[e];
      }
    } while (stack_.size() != stack_bottom_[ei]);

    while (!stack_.empty() &&
           (conflicting(stack_.back().left, ei) || conflicting(stack_.back().right, ei))) {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (conflicting(q.right, ei)) q.swap();
      if (conflicting(q.right, ei)) return false;
      ref_[p.right.low] = q.right.high;
      if (q.right.low != kNone) p.right.low = q.right.low;
      if (p.left.empty()) {
        p.left = q.left;
      } else {
        ref_[p.left.low] = q.left.high;
      }
      p.left.low = q.left.low;
    }
    if (!(p.left.empty() && p.right.empty())) stack_.push_back(p);
    return true;
  }

  void remove_back_edges(int e) {
    const int u = src_[e];
    while (!stack_.empty() && lowest(stack_.back()) == height_[u]) stack_.pop_back();
    if (!stack_.empty()) {
      ConflictPair p = stack_.back();
      stack_.pop_back();
      while (p.left.high != kNone && dst_[p.left.high] == u) p.left.high = ref_[p.left.high];
      if (p.left.high == kNone && p.left.low != kNone) {
        ref_[p.left.low] = p.right.low;
        p.left.low = kNone;
      }
      while (p.right.high != kNone && dst_[p.right.high] == u) {
        p.right.high = ref_[p.right.high];
      }
      if (p.right.high == kNone && p.right.low != kNone) {
        ref_[p.right.low] = p.left.low;
        p.right.low = kNone;
      }
      stack_.push_back(p);
    }
    if (lowpt_[e] < height_[u] && !stack_.empty()) {
      const int hl = stack_.back().left.high;
      const int hr = stack_.back().right.high;
      ref_[e] = (hl != kNone && (hr == kNone || lowpt_[hl] > lowpt_[hr])) ? hl : hr;
    }
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<std::vector<bool>> visited_;
  std::vector<int> height_;
  std::vector<int> parent_edge_;
  std::vector<int> roots_;
  std::vector<std::vector<int>> out_;
  std::vector<int> src_, dst_, lowpt_, lowpt2_, nesting_;
  std::vector<int> ref_, lowpt_edge_;
  std::vector<std::size_t> stack_bottom_;
  std::vector<ConflictPair> stack_;
};

}  // namespace

bool is_planar_adjacency(const std::vector<std::vector<int>>& adjacency) {
  return LeftRight(adjacency).run();
}

}  // namespace graphgrpo
