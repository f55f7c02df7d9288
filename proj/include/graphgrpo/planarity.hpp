#pragma once

#include <vector>

namespace graphgrpo {

// Left-right planarity test on a simple undirected graph given as adjacency
// lists (no self-loops, no parallel edges). Runs in linear time.
bool is_planar_adjacency(const std::vector<std::vector<int>>& adjacency);

}  // namespace graphgrpo
