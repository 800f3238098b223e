#ifndef HTGN_HYPEREDGE_BUILDER_HPP
#define HTGN_HYPEREDGE_BUILDER_HPP

#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "htgn/hyperedge_registry.hpp"

namespace htgn {

/// When a snapshot flushes: after `max_edges` distinct edges accumulate, or
/// (when set) before admitting an event that would stretch the snapshot's
/// time span to `max_span` or beyond.
struct SnapshotPolicy {
    std::size_t max_edges = 200;
    std::optional<double> max_span;
};

/// Edge set accumulated since the last flush (unordered pairs, deduplicated).
class Snapshot {
public:
    void add_edge(NodeId u, NodeId v, double t);
    void reset();

    bool empty() const { return edges_.empty(); }
    std::size_t edge_count() const { return edges_.size(); }
    double first_time() const { return first_time_; }
    double last_time() const { return last_time_; }
    const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
    std::vector<std::pair<NodeId, NodeId>> edge_list() const;

private:
    std::set<std::pair<NodeId, NodeId>> edges_;
    double first_time_ = 0.0;
    double last_time_ = 0.0;
};

struct IngestResult {
    /// Merges from a time-window flush that closed before this event.
    std::vector<MergeEvent> window_merges;
    std::optional<HyperedgeId> new_pair;
    /// Merges from the edge-count flush triggered by this event.
    std::vector<MergeEvent> batch_merges;

    std::vector<MergeEvent> all_merges() const {
        std::vector<MergeEvent> out = window_merges;
        out.insert(out.end(), batch_merges.begin(), batch_merges.end());
        return out;
    }
};

/// One step of the homogeneous construction loop: creates the pair hyperedge
/// {u,v} unless u and v are already co-members of some live hyperedge,
/// refreshes t[u,E]/t[v,E] for every live E containing both, records the edge
/// in the snapshot, and flushes when the policy triggers. Rejects self-loops.
IngestResult ingest_link_homogeneous(HyperedgeRegistry& reg, Snapshot& snap, NodeId u, NodeId v,
                                     double t, const SnapshotPolicy& policy);

/// Pairwise ablation: hyperedge construction disabled, every hyperedge is a
/// node pair and nothing ever merges. Returns the created pair's id, if any.
std::optional<HyperedgeId> ingest_link_pairwise(HyperedgeRegistry& reg, NodeId u, NodeId v,
                                                double t);

/// Enumerate the snapshot's maximal cliques of size >= 3 and replace, for
/// each clique c, the live hyperedges contained in c (the set D_c) by one
/// hyperedge with members c. A clique strictly contained in a live hyperedge
/// is skipped, preserving the antichain invariant. Resets the snapshot.
std::vector<MergeEvent> flush_snapshot(HyperedgeRegistry& reg, Snapshot& snap, double t_star);

struct BipartiteDelta {
    bool added_member = false;
    std::optional<NodeId> evicted;
};

/// Bipartite structure update: add side-A node u to E[v] and refresh
/// t[u,E[v]]. When |E[v]| exceeds `capacity`, the member with the largest
/// gap since its last interaction with v is evicted iff that gap > t_prime.
BipartiteDelta ingest_link_bipartite(HyperedgeRegistry& reg, NodeId u, NodeId v, double t,
                                     std::size_t capacity, double t_prime);

/// Remove every membership with t_star - t[n,E] > t_prime (strict). Bipartite
/// only; hyperedges and slots persist even if emptied.
std::vector<std::pair<NodeId, HyperedgeId>> prune_stale_memberships(HyperedgeRegistry& reg,
                                                                    double t_star,
                                                                    double t_prime);

/// Append {"t":..,"new":[..],"absorbed":[ids]} JSON lines for replay/debug.
void append_merge_log(std::ostream& out, const std::vector<MergeEvent>& merges);

}  // namespace htgn

#endif  // HTGN_HYPEREDGE_BUILDER_HPP
