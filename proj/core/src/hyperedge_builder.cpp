#include "htgn/hyperedge_builder.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "htgn/clique.hpp"

namespace htgn {

void Snapshot::add_edge(NodeId u, NodeId v, double t) {
    if (edges_.empty()) first_time_ = t;
    last_time_ = t;
    edges_.insert(u < v ? std::make_pair(u, v) : std::make_pair(v, u));
}

void Snapshot::reset() {
    edges_.clear();
    first_time_ = last_time_ = 0.0;
}

std::vector<std::pair<NodeId, NodeId>> Snapshot::edge_list() const {
    return {edges_.begin(), edges_.end()};
}

namespace {

bool is_subset(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    // both sorted
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void touch_common_hyperedges(HyperedgeRegistry& reg, NodeId u, NodeId v, double t) {
    // An event (u,v) is an interaction *within* every live hyperedge that
    // contains both endpoints; refresh t[u,E] and t[v,E] for those.
    const auto& hu = reg.memberships(u);
    const auto& hv = reg.memberships(v);
    const auto& small = hu.size() <= hv.size() ? hu : hv;
    const auto& big = hu.size() <= hv.size() ? hv : hu;
    for (HyperedgeId e : small) {
        if (big.count(e)) {
            reg.touch(u, e, t);
            reg.touch(v, e, t);
        }
    }
}

}  // namespace

IngestResult ingest_link_homogeneous(HyperedgeRegistry& reg, Snapshot& snap, NodeId u, NodeId v,
                                     double t, const SnapshotPolicy& policy) {
    if (u == v)
        throw std::invalid_argument("self-loop rejected: (" + std::to_string(u) + "," +
                                    std::to_string(v) + ")");
    IngestResult result;

    // Time-window policy: close the previous window before admitting an event
    // that would stretch it to max_span or beyond.
    if (policy.max_span && !snap.empty() && t - snap.first_time() >= *policy.max_span) {
        result.window_merges = flush_snapshot(reg, snap, snap.last_time());
    }

    if (!reg.co_members(u, v)) {
        result.new_pair = reg.create({u, v}, t);
    } else {
        touch_common_hyperedges(reg, u, v, t);
    }

    snap.add_edge(u, v, t);
    if (snap.edge_count() >= policy.max_edges) {
        result.batch_merges = flush_snapshot(reg, snap, t);
    }
    return result;
}

std::optional<HyperedgeId> ingest_link_pairwise(HyperedgeRegistry& reg, NodeId u, NodeId v,
                                                double t) {
    if (u == v)
        throw std::invalid_argument("self-loop rejected: (" + std::to_string(u) + "," +
                                    std::to_string(v) + ")");
    if (!reg.co_members(u, v)) return reg.create({u, v}, t);
    touch_common_hyperedges(reg, u, v, t);
    return std::nullopt;
}

std::vector<MergeEvent> flush_snapshot(HyperedgeRegistry& reg, Snapshot& snap, double t_star) {
    std::vector<MergeEvent> merges;
    if (snap.empty()) return merges;

    auto cliques = enumerate_maximal_cliques(snap.edge_list());
    for (const auto& clique : cliques) {
        if (clique.size() < 3) continue;

        // Candidate live hyperedges: anything sharing a node with the clique.
        std::set<HyperedgeId> candidates;
        for (NodeId n : clique)
            for (HyperedgeId e : reg.memberships(n)) candidates.insert(e);

        // A clique strictly inside an existing structure adds nothing and
        // would break the antichain; skip it.
        bool dominated = false;
        for (HyperedgeId e : candidates) {
            const auto& m = reg.get(e).members;
            if (m.size() > clique.size() && is_subset(clique, m)) {
                dominated = true;
                break;
            }
        }
        if (dominated) continue;

        MergeEvent me;
        me.new_members = clique;
        me.time = t_star;
        for (HyperedgeId e : candidates) {
            const auto& m = reg.get(e).members;
            if (is_subset(m, clique))
                me.absorbed.push_back({e, reg.get(e).slot, reg.last_active(e)});
        }
        std::sort(me.absorbed.begin(), me.absorbed.end(),
                  [](const auto& a, const auto& b) { return a.slot < b.slot; });

        // New members inherit their recency from the structures they arrive
        // with; members with no absorbed cover start at the flush time.
        std::map<NodeId, double> inherited;
        for (const auto& a : me.absorbed)
            for (NodeId n : reg.get(a.id).members)
                inherited[n] = std::max(inherited.count(n) ? inherited[n] : 0.0,
                                        reg.recency(n, a.id));
        for (const auto& a : me.absorbed) reg.remove(a.id);

        me.new_id = reg.create(clique, t_star);
        me.assigned_slot = reg.get(me.new_id).slot;
        for (NodeId n : clique) {
            auto it = inherited.find(n);
            if (it != inherited.end()) reg.touch(n, me.new_id, it->second);
        }
        merges.push_back(std::move(me));
    }
    snap.reset();
    return merges;
}

BipartiteDelta ingest_link_bipartite(HyperedgeRegistry& reg, NodeId u, NodeId v, double t,
                                     std::size_t capacity, double t_prime) {
    if (!reg.is_bipartite())
        throw std::logic_error("ingest_link_bipartite requires a bipartite registry");
    HyperedgeId ev = reg.owner_of(v);  // throws if v is not side-B (same-side link)
    BipartiteDelta delta;
    const auto& members = reg.get(ev).members;
    delta.added_member = !std::binary_search(members.begin(), members.end(), u);
    reg.add_member(ev, u, t);

    if (reg.get(ev).members.size() > capacity) {
        // Find the member with the largest gap since its last interaction
        // with v; evict only if that gap exceeds t_prime.
        NodeId oldest = -1;
        double best_gap = -1.0;
        for (NodeId n : reg.get(ev).members) {
            double gap = t - reg.recency(n, ev);
            if (gap > best_gap) {
                best_gap = gap;
                oldest = n;
            }
        }
        if (best_gap > t_prime) {
            reg.remove_member(ev, oldest);
            delta.evicted = oldest;
        }
    }
    return delta;
}

std::vector<std::pair<NodeId, HyperedgeId>> prune_stale_memberships(HyperedgeRegistry& reg,
                                                                    double t_star,
                                                                    double t_prime) {
    if (!reg.is_bipartite())
        throw std::logic_error("prune_stale_memberships applies to bipartite registries only");
    std::vector<std::pair<NodeId, HyperedgeId>> removed;
    for (const auto& [id, e] : reg.live()) {
        for (NodeId n : e.members) {
            if (t_star - reg.recency(n, id) > t_prime) removed.emplace_back(n, id);
        }
    }
    for (const auto& [n, id] : removed) reg.remove_member(id, n);
    return removed;
}

void append_merge_log(std::ostream& out, const std::vector<MergeEvent>& merges) {
    for (const MergeEvent& me : merges) {
        nlohmann::json j;
        j["t"] = me.time;
        j["new"] = me.new_members;
        std::vector<HyperedgeId> ids;
        ids.reserve(me.absorbed.size());
        for (const auto& a : me.absorbed) ids.push_back(a.id);
        j["absorbed"] = ids;
        out << j.dump() << "\n";
    }
}

}  // namespace htgn
