#include "htgn/clique.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace htgn {

namespace {

// Fixed-capacity bitset over the snapshot's local vertex indices.
class Bits {
public:
    explicit Bits(std::size_t n) : words_((n + 63) / 64, 0), n_(n) {}

    void set(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }
    std::size_t count_and(const Bits& o) const {
        std::size_t c = 0;
        for (std::size_t k = 0; k < words_.size(); ++k)
            c += static_cast<std::size_t>(__builtin_popcountll(words_[k] & o.words_[k]));
        return c;
    }
    Bits intersect(const Bits& o) const {
        Bits r(n_);
        for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] = words_[k] & o.words_[k];
        return r;
    }
    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t w = words_[k];
            while (w) {
                unsigned b = static_cast<unsigned>(__builtin_ctzll(w));
                f(k * 64 + b);
                w &= w - 1;
            }
        }
    }

private:
    std::vector<std::uint64_t> words_;
    std::size_t n_;
};

struct BkState {
    const std::vector<Bits>* adj;
    std::vector<std::size_t> clique;
    std::vector<std::vector<std::size_t>>* out;
};

// Classic pivoted recursion: expand only candidates not adjacent to the pivot.
void bron_kerbosch(BkState& st, Bits p, Bits x) {
    if (!p.any() && !x.any()) {
        if (st.clique.size() >= 2) st.out->push_back(st.clique);
        return;
    }
    // Pivot: vertex of P union X with the most neighbors in P.
    std::size_t pivot = 0, best = 0;
    bool found = false;
    auto consider = [&](std::size_t v) {
        std::size_t deg = p.count_and((*st.adj)[v]);
        if (!found || deg > best) {
            pivot = v;
            best = deg;
            found = true;
        }
    };
    p.for_each(consider);
    x.for_each(consider);

    std::vector<std::size_t> ext;
    p.for_each([&](std::size_t v) {
        if (!(*st.adj)[pivot].test(v)) ext.push_back(v);
    });
    for (std::size_t v : ext) {
        st.clique.push_back(v);
        bron_kerbosch(st, p.intersect((*st.adj)[v]), x.intersect((*st.adj)[v]));
        st.clique.pop_back();
        p.reset(v);
        x.set(v);
    }
}

}  // namespace

std::vector<std::vector<NodeId>> enumerate_maximal_cliques(
    const std::vector<std::pair<NodeId, NodeId>>& edges) {
    // Compact the touched vertices to local indices.
    std::vector<NodeId> verts;
    verts.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
        if (a == b) throw std::invalid_argument("enumerate_maximal_cliques: self-loop on node " +
                                                std::to_string(a));
        verts.push_back(a);
        verts.push_back(b);
    }
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    const std::size_t n = verts.size();
    if (n == 0) return {};
    auto local = [&](NodeId v) {
        return static_cast<std::size_t>(
            std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
    };

    std::vector<Bits> adj(n, Bits(n));
    std::vector<std::size_t> degree(n, 0);
    for (const auto& [a, b] : edges) {
        std::size_t ia = local(a), ib = local(b);
        if (!adj[ia].test(ib)) {
            adj[ia].set(ib);
            adj[ib].set(ia);
            ++degree[ia];
            ++degree[ib];
        }
    }

    // Degeneracy ordering: repeatedly remove a minimum-degree vertex.
    std::vector<std::size_t> order;
    order.reserve(n);
    {
        std::vector<std::size_t> deg = degree;
        std::vector<bool> removed(n, false);
        for (std::size_t step = 0; step < n; ++step) {
            std::size_t best = n;
            for (std::size_t v = 0; v < n; ++v)
                if (!removed[v] && (best == n || deg[v] < deg[best])) best = v;
            removed[best] = true;
            order.push_back(best);
            adj[best].for_each([&](std::size_t w) {
                if (!removed[w] && deg[w] > 0) --deg[w];
            });
        }
    }
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;

    std::vector<std::vector<std::size_t>> found;
    BkState st{&adj, {}, &found};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t v = order[i];
        Bits p(n), x(n);
        adj[v].for_each([&](std::size_t w) { (pos[w] > i ? p : x).set(w); });
        st.clique.assign(1, v);
        bron_kerbosch(st, std::move(p), std::move(x));
    }

    std::vector<std::vector<NodeId>> out;
    out.reserve(found.size());
    for (auto& c : found) {
        std::vector<NodeId> members;
        members.reserve(c.size());
        for (std::size_t v : c) members.push_back(verts[v]);
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

}  // namespace htgn
