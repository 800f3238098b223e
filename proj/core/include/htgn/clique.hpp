#ifndef HTGN_CLIQUE_HPP
#define HTGN_CLIQUE_HPP

#include <utility>
#include <vector>

#include "htgn/temporal_graph.hpp"

namespace htgn {

/// All maximal cliques (size >= 2) of the simple undirected graph given by
/// `edges`. Bron-Kerbosch with pivoting over a degeneracy ordering; output is
/// deterministic: members sorted ascending, cliques sorted by (size, members).
/// Self-loops are rejected.
std::vector<std::vector<NodeId>> enumerate_maximal_cliques(
    const std::vector<std::pair<NodeId, NodeId>>& edges);

}  // namespace htgn

#endif  // HTGN_CLIQUE_HPP
