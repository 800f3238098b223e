#ifndef HTGN_HYPEREDGE_REGISTRY_HPP
#define HTGN_HYPEREDGE_REGISTRY_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "htgn/temporal_graph.hpp"

namespace htgn {

using HyperedgeId = std::int64_t;

struct Hyperedge {
    HyperedgeId id = -1;
    std::vector<NodeId> members;  // sorted ascending
    int slot = -1;
    double created_at = 0.0;
};

/// One snapshot-flush aggregation: the clique `new_members` replaces every
/// live hyperedge whose member set it contains.
struct MergeEvent {
    struct Absorbed {
        HyperedgeId id = -1;
        int slot = -1;
        double t_last = 0.0;  // t[E] of the absorbed hyperedge
    };
    std::vector<NodeId> new_members;
    HyperedgeId new_id = -1;
    std::vector<Absorbed> absorbed;  // sorted by slot
    int assigned_slot = -1;
    double time = 0.0;  // flush timestamp t*
};

/// Live hyperedge set plus the membership map H[n], the recency map t[n,E],
/// and a reusable memory-slot pool. Homogeneous registries allocate slots on
/// demand; bipartite registries carry one fixed hyperedge per side-B node.
///
/// Homogeneous invariant (antichain): no live member set is a strict subset
/// of another live member set.
class HyperedgeRegistry {
public:
    explicit HyperedgeRegistry(std::size_t num_nodes);

    /// Bipartite setup: one (initially empty) hyperedge per side-B node,
    /// z = |side-B| slots, fixed for the registry's lifetime.
    static HyperedgeRegistry bipartite(std::size_t num_nodes,
                                       const std::vector<NodeId>& side_b);

    std::size_t num_nodes() const { return num_nodes_; }
    bool is_bipartite() const { return bipartite_; }

    const std::map<HyperedgeId, Hyperedge>& live() const { return live_; }
    const Hyperedge& get(HyperedgeId id) const;
    bool contains(HyperedgeId id) const { return live_.count(id) != 0; }

    /// H[n]: ids of live hyperedges containing n (ordered).
    const std::set<HyperedgeId>& memberships(NodeId n) const;
    bool covered(NodeId n) const { return !memberships(n).empty(); }

    /// Some live hyperedge contains both u and v.
    bool co_members(NodeId u, NodeId v) const;

    /// t[n,E]; defined exactly on membership pairs.
    double recency(NodeId n, HyperedgeId e) const;
    /// t[E] = max over members of t[n,E]; created_at for memberless hyperedges.
    double last_active(HyperedgeId e) const;
    void touch(NodeId n, HyperedgeId e, double t);

    /// Bipartite: the fixed hyperedge representing side-B node v.
    HyperedgeId owner_of(NodeId v) const;

    // Mutation primitives used by the builder operations.
    HyperedgeId create(std::vector<NodeId> members, double t);
    void remove(HyperedgeId id);
    void add_member(HyperedgeId id, NodeId n, double t);
    void remove_member(HyperedgeId id, NodeId n);

    int allocated_slots() const { return allocated_slots_; }
    int free_slots() const { return static_cast<int>(slot_pool_.size()); }
    int peak_slots() const { return peak_slots_; }
    std::size_t live_count() const { return live_.size(); }

    /// One JSON object per live hyperedge, ordered by id:
    /// {"id":..,"members":[..],"slot":..,"t_last":..}
    void dump_jsonl(std::ostream& out) const;

    /// Membership/recency consistency (and slot bookkeeping); throws
    /// std::logic_error on violation. O(total membership).
    void validate() const;

private:
    std::size_t num_nodes_ = 0;
    bool bipartite_ = false;
    std::map<HyperedgeId, Hyperedge> live_;
    std::vector<std::set<HyperedgeId>> membership_;
    std::map<HyperedgeId, std::map<NodeId, double>> recency_;
    std::map<NodeId, HyperedgeId> owner_;  // bipartite: side-B node -> hyperedge
    std::vector<int> slot_pool_;           // free slots, LIFO
    int allocated_slots_ = 0;
    int peak_slots_ = 0;
    HyperedgeId next_id_ = 0;

    int claim_slot();
    void release_slot(int slot);
    void check_node(NodeId n) const;
};

}  // namespace htgn

#endif  // HTGN_HYPEREDGE_REGISTRY_HPP
