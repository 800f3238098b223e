#include "htgn/hyperedge_registry.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace htgn {

HyperedgeRegistry::HyperedgeRegistry(std::size_t num_nodes)
    : num_nodes_(num_nodes), membership_(num_nodes) {}

HyperedgeRegistry HyperedgeRegistry::bipartite(std::size_t num_nodes,
                                               const std::vector<NodeId>& side_b) {
    HyperedgeRegistry reg(num_nodes);
    reg.bipartite_ = true;
    // z equals the number of side-B nodes; hyperedges start empty and persist.
    for (NodeId v : side_b) {
        reg.check_node(v);
        Hyperedge e;
        e.id = reg.next_id_++;
        e.slot = reg.claim_slot();
        e.created_at = 0.0;
        reg.owner_[v] = e.id;
        reg.recency_[e.id];
        reg.live_.emplace(e.id, std::move(e));
    }
    reg.peak_slots_ = reg.allocated_slots_;
    return reg;
}

void HyperedgeRegistry::check_node(NodeId n) const {
    if (n < 0 || static_cast<std::size_t>(n) >= num_nodes_)
        throw std::invalid_argument("node id " + std::to_string(n) + " out of range (num_nodes=" +
                                    std::to_string(num_nodes_) + ")");
}

const Hyperedge& HyperedgeRegistry::get(HyperedgeId id) const {
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("no live hyperedge with id " + std::to_string(id));
    return it->second;
}

const std::set<HyperedgeId>& HyperedgeRegistry::memberships(NodeId n) const {
    check_node(n);
    return membership_[static_cast<std::size_t>(n)];
}

bool HyperedgeRegistry::co_members(NodeId u, NodeId v) const {
    const auto& hu = memberships(u);
    const auto& hv = memberships(v);
    const auto& small = hu.size() <= hv.size() ? hu : hv;
    const auto& big = hu.size() <= hv.size() ? hv : hu;
    for (HyperedgeId e : small)
        if (big.count(e)) return true;
    return false;
}

double HyperedgeRegistry::recency(NodeId n, HyperedgeId e) const {
    auto it = recency_.find(e);
    if (it == recency_.end())
        throw std::invalid_argument("recency: no live hyperedge " + std::to_string(e));
    auto jt = it->second.find(n);
    if (jt == it->second.end())
        throw std::invalid_argument("recency: node " + std::to_string(n) +
                                    " is not a member of hyperedge " + std::to_string(e));
    return jt->second;
}

double HyperedgeRegistry::last_active(HyperedgeId e) const {
    auto it = recency_.find(e);
    if (it == recency_.end())
        throw std::invalid_argument("last_active: no live hyperedge " + std::to_string(e));
    if (it->second.empty()) return get(e).created_at;
    double t = it->second.begin()->second;
    for (const auto& [n, tn] : it->second) t = std::max(t, tn);
    return t;
}

void HyperedgeRegistry::touch(NodeId n, HyperedgeId e, double t) {
    auto it = recency_.find(e);
    if (it == recency_.end())
        throw std::invalid_argument("touch: no live hyperedge " + std::to_string(e));
    auto jt = it->second.find(n);
    if (jt == it->second.end())
        throw std::invalid_argument("touch: node " + std::to_string(n) +
                                    " is not a member of hyperedge " + std::to_string(e));
    jt->second = t;
}

HyperedgeId HyperedgeRegistry::owner_of(NodeId v) const {
    auto it = owner_.find(v);
    if (it == owner_.end())
        throw std::invalid_argument("owner_of: node " + std::to_string(v) +
                                    " has no fixed hyperedge (not a side-B node?)");
    return it->second;
}

int HyperedgeRegistry::claim_slot() {
    int slot;
    if (!slot_pool_.empty()) {
        slot = slot_pool_.back();
        slot_pool_.pop_back();
    } else {
        slot = allocated_slots_++;
    }
    return slot;
}

void HyperedgeRegistry::release_slot(int slot) { slot_pool_.push_back(slot); }

HyperedgeId HyperedgeRegistry::create(std::vector<NodeId> members, double t) {
    if (bipartite_)
        throw std::logic_error("create: bipartite registries have a fixed hyperedge set");
    if (members.size() < 2)
        throw std::invalid_argument("hyperedge must have at least 2 members");
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end())
        throw std::invalid_argument("hyperedge members must be distinct");
    for (NodeId n : members) check_node(n);

    Hyperedge e;
    e.id = next_id_++;
    e.members = std::move(members);
    e.slot = claim_slot();
    e.created_at = t;
    auto& rec = recency_[e.id];
    for (NodeId n : e.members) {
        membership_[static_cast<std::size_t>(n)].insert(e.id);
        rec[n] = t;
    }
    HyperedgeId id = e.id;
    live_.emplace(id, std::move(e));
    peak_slots_ = std::max<int>(peak_slots_, static_cast<int>(live_.size()));
    return id;
}

void HyperedgeRegistry::remove(HyperedgeId id) {
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("remove: no live hyperedge " + std::to_string(id));
    if (bipartite_) throw std::logic_error("remove: bipartite hyperedges are fixed");
    for (NodeId n : it->second.members) membership_[static_cast<std::size_t>(n)].erase(id);
    release_slot(it->second.slot);
    recency_.erase(id);
    live_.erase(it);
}

void HyperedgeRegistry::add_member(HyperedgeId id, NodeId n, double t) {
    check_node(n);
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("add_member: no live hyperedge " + std::to_string(id));
    auto& members = it->second.members;
    auto pos = std::lower_bound(members.begin(), members.end(), n);
    if (pos == members.end() || *pos != n) members.insert(pos, n);
    membership_[static_cast<std::size_t>(n)].insert(id);
    recency_[id][n] = t;
}

void HyperedgeRegistry::remove_member(HyperedgeId id, NodeId n) {
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("remove_member: no live hyperedge " + std::to_string(id));
    auto& members = it->second.members;
    auto pos = std::lower_bound(members.begin(), members.end(), n);
    if (pos == members.end() || *pos != n)
        throw std::invalid_argument("remove_member: node " + std::to_string(n) +
                                    " not in hyperedge " + std::to_string(id));
    members.erase(pos);
    membership_[static_cast<std::size_t>(n)].erase(id);
    recency_[id].erase(n);
}

void HyperedgeRegistry::dump_jsonl(std::ostream& out) const {
    for (const auto& [id, e] : live_) {
        nlohmann::json j;
        j["id"] = id;
        j["members"] = e.members;
        j["slot"] = e.slot;
        j["t_last"] = last_active(id);
        out << j.dump() << "\n";
    }
}

void HyperedgeRegistry::validate() const {
    std::size_t membership_total = 0;
    for (std::size_t n = 0; n < num_nodes_; ++n) {
        for (HyperedgeId e : membership_[n]) {
            auto it = live_.find(e);
            if (it == live_.end())
                throw std::logic_error("membership references dead hyperedge " +
                                       std::to_string(e));
            const auto& m = it->second.members;
            if (!std::binary_search(m.begin(), m.end(), static_cast<NodeId>(n)))
                throw std::logic_error("membership map lists node " + std::to_string(n) +
                                       " for hyperedge " + std::to_string(e) +
                                       " but it is not a member");
            ++membership_total;
        }
    }
    std::size_t member_total = 0;
    std::set<int> slots_in_use;
    for (const auto& [id, e] : live_) {
        if (!bipartite_ && e.members.size() < 2)
            throw std::logic_error("live hyperedge " + std::to_string(id) + " has fewer than 2 members");
        if (!slots_in_use.insert(e.slot).second)
            throw std::logic_error("slot " + std::to_string(e.slot) + " used twice");
        auto rit = recency_.find(id);
        if (rit == recency_.end())
            throw std::logic_error("missing recency table for hyperedge " + std::to_string(id));
        if (rit->second.size() != e.members.size())
            throw std::logic_error("recency table size mismatch for hyperedge " +
                                   std::to_string(id));
        for (NodeId n : e.members) {
            if (!membership_[static_cast<std::size_t>(n)].count(id))
                throw std::logic_error("member " + std::to_string(n) +
                                       " missing from membership map for hyperedge " +
                                       std::to_string(id));
            if (!rit->second.count(n))
                throw std::logic_error("recency undefined for member " + std::to_string(n) +
                                       " of hyperedge " + std::to_string(id));
        }
        member_total += e.members.size();
    }
    if (member_total != membership_total)
        throw std::logic_error("membership map and member lists disagree");
    if (static_cast<int>(live_.size()) + static_cast<int>(slot_pool_.size()) != allocated_slots_)
        throw std::logic_error("slot conservation violated: live + free != allocated");
}

}  // namespace htgn
