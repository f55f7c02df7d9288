#pragma once

#include <string>
#include <vector>

#include "graphgrpo/graph.hpp"

namespace graphgrpo {

inline constexpr int kExactCanonicalMaxNodes = 16;

// Isomorphism-invariant byte key of a labeled graph.
//
// For n <= 16 the key is exact: the lexicographically smallest serialization
// (node labels, then pair labels in column order (0,1),(0,2),(1,2),(0,3),...)
// over all node orderings that list nodes by their colour-refinement class.
// The refinement colouring is itself isomorphism-invariant, so equal keys
// hold exactly for isomorphic graphs. Interchangeable nodes (same label and
// same labelled neighbourhood) are branched on once.
//
// For larger graphs the key is the full colour-refinement history. That is
// invariant but not complete: graphs that refinement cannot tell apart
// (e.g. some regular graphs) share a key.
std::string canonical_key(const GraphState& g);

// The ordering that attains the exact key: perm[old node] = new position.
// Only defined for n <= 16.
std::vector<int> canonical_permutation(const GraphState& g);

}  // namespace graphgrpo
