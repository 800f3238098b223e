#include "htgn/temporal_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "htgn/format.hpp"

namespace htgn {

namespace {

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void SplitSpec::validate() const {
    auto in_open_unit = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_open_unit(train_frac) || !in_open_unit(val_frac) || !in_open_unit(test_frac))
        throw std::invalid_argument("split fractions must each lie in (0,1): got (" +
                                    format_double(train_frac) + "," + format_double(val_frac) +
                                    "," + format_double(test_frac) + ")");
    double s = train_frac + val_frac + test_frac;
    if (std::abs(s - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1, got " + format_double(s));
}

TemporalGraph TemporalGraph::from_events(std::vector<Event> events, std::size_t num_nodes,
                                         GraphKind kind, int edge_feat_dim,
                                         std::vector<Side> partition) {
    TemporalGraph g;
    g.events_ = std::move(events);
    g.num_nodes_ = num_nodes;
    g.kind_ = kind;
    g.d_e_ = edge_feat_dim;
    g.partition_ = std::move(partition);
    std::stable_sort(g.events_.begin(), g.events_.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    g.dense_to_raw_.resize(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) g.dense_to_raw_[i] = static_cast<std::int64_t>(i);
    g.check_invariants();
    g.build_index();
    return g;
}

void TemporalGraph::check_invariants() const {
    if (kind_ == GraphKind::bipartite && partition_.size() != num_nodes_)
        throw std::invalid_argument("bipartite graph requires a full side partition");
    double prev = 0.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        if (e.time < 0.0)
            throw std::invalid_argument("negative timestamp at event " + std::to_string(i));
        if (i > 0 && e.time < prev)
            throw std::invalid_argument("events not sorted by time at index " + std::to_string(i));
        prev = e.time;
        if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= num_nodes_ ||
            static_cast<std::size_t>(e.dst) >= num_nodes_)
            throw std::invalid_argument("node id out of range at event " + std::to_string(i));
        if (!e.feat.empty() && static_cast<int>(e.feat.size()) != d_e_)
            throw std::invalid_argument("feature length mismatch at event " + std::to_string(i) +
                                        ": expected " + std::to_string(d_e_) + ", got " +
                                        std::to_string(e.feat.size()));
        if (kind_ == GraphKind::bipartite) {
            if (partition_[static_cast<std::size_t>(e.src)] != Side::a ||
                partition_[static_cast<std::size_t>(e.dst)] != Side::b)
                throw std::invalid_argument("bipartite violation at event " + std::to_string(i) +
                                            ": src must be side-A and dst side-B");
        }
    }
}

void TemporalGraph::build_index() {
    history_.assign(num_nodes_, {});
    for (const Event& e : events_) {
        history_[static_cast<std::size_t>(e.src)].emplace_back(e.time, e.dst);
        history_[static_cast<std::size_t>(e.dst)].emplace_back(e.time, e.src);
    }
    side_a_.clear();
    side_b_.clear();
    if (kind_ == GraphKind::bipartite) {
        for (std::size_t i = 0; i < partition_.size(); ++i) {
            (partition_[i] == Side::b ? side_b_ : side_a_).push_back(static_cast<NodeId>(i));
        }
    }
}

const std::vector<std::pair<double, NodeId>>& TemporalGraph::history(NodeId n) const {
    return history_.at(static_cast<std::size_t>(n));
}

std::vector<NeighborHit> TemporalGraph::neighbors_before(NodeId u, double t,
                                                         std::size_t cap) const {
    const auto& h = history_.at(static_cast<std::size_t>(u));
    auto it = std::lower_bound(h.begin(), h.end(), t, [](const auto& row, double tt) {
        return row.first < tt;
    });
    std::vector<NeighborHit> out;
    std::unordered_set<NodeId> seen;
    // Walk backwards from the last event strictly before t; the first hit per
    // partner is its most recent interaction.
    for (auto rit = std::make_reverse_iterator(it); rit != h.rend() && out.size() < cap; ++rit) {
        if (seen.insert(rit->second).second) out.push_back({rit->second, rit->first});
    }
    return out;
}

std::vector<NodeId> TemporalGraph::partners_at(NodeId u, double t) const {
    const auto& h = history_.at(static_cast<std::size_t>(u));
    auto lo = std::lower_bound(h.begin(), h.end(), t,
                               [](const auto& row, double tt) { return row.first < tt; });
    std::vector<NodeId> out;
    for (auto it = lo; it != h.end() && it->first == t; ++it) out.push_back(it->second);
    return out;
}

TemporalGraph load_events(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event file: " + path);

    std::string line;
    std::size_t line_no = 0;
    int feat_cols = -1;  // -1: unknown until header seen

    std::vector<Event> events;
    std::unordered_map<std::int64_t, NodeId> raw_to_dense;
    std::vector<std::int64_t> dense_to_raw;
    auto densify = [&](std::int64_t raw) {
        auto it = raw_to_dense.find(raw);
        if (it != raw_to_dense.end()) return it->second;
        NodeId id = static_cast<NodeId>(dense_to_raw.size());
        raw_to_dense.emplace(raw, id);
        dense_to_raw.push_back(raw);
        return id;
    };

    std::vector<std::pair<std::int64_t, std::int64_t>> raw_endpoints;  // per event, pre-densify

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_csv_line(line);
        if (line_no == 1 && !fields.empty() && fields[0] == "src") {
            if (fields.size() < 3 || fields[1] != "dst" || fields[2] != "t")
                line_error(path, line_no, "header must start with src,dst,t");
            feat_cols = static_cast<int>(fields.size()) - 3;
            if (feat_cols > 0 && feat_cols != opts.edge_feat_dim)
                line_error(path, line_no,
                           "header declares " + std::to_string(feat_cols) +
                               " feature columns but d_e is " + std::to_string(opts.edge_feat_dim));
            continue;
        }
        if (feat_cols == -1) feat_cols = 0;  // headerless file: bare src,dst,t rows
        if (static_cast<int>(fields.size()) != 3 + feat_cols)
            line_error(path, line_no,
                       "expected " + std::to_string(3 + feat_cols) + " fields, got " +
                           std::to_string(fields.size()));
        Event e;
        try {
            std::int64_t raw_src = std::stoll(fields[0]);
            std::int64_t raw_dst = std::stoll(fields[1]);
            if (raw_src < 0 || raw_dst < 0) line_error(path, line_no, "negative node id");
            raw_endpoints.emplace_back(raw_src, raw_dst);
            e.time = std::stod(fields[2]);
            if (!std::isfinite(e.time)) line_error(path, line_no, "non-finite timestamp");
            if (e.time < 0.0) line_error(path, line_no, "negative timestamp");
            e.feat.reserve(static_cast<std::size_t>(feat_cols));
            for (int k = 0; k < feat_cols; ++k) {
                double f = std::stod(fields[static_cast<std::size_t>(3 + k)]);
                if (!std::isfinite(f)) line_error(path, line_no, "non-finite feature value");
                e.feat.push_back(f);
            }
        } catch (const std::invalid_argument&) {
            line_error(path, line_no, "malformed field");
        } catch (const std::out_of_range&) {
            line_error(path, line_no, "field out of range");
        }
        events.push_back(std::move(e));
    }

    // Dense ids in order of first appearance in file order.
    for (std::size_t i = 0; i < events.size(); ++i) {
        events[i].src = densify(raw_endpoints[i].first);
        events[i].dst = densify(raw_endpoints[i].second);
    }

    std::vector<Side> partition;
    if (opts.kind == GraphKind::bipartite) {
        partition.assign(dense_to_raw.size(), Side::a);
        if (opts.side_b_rule == SideBRule::sidecar) {
            std::string sc = opts.sidecar_path.value_or(path + ".side_b.json");
            std::ifstream scin(sc);
            if (!scin) throw std::runtime_error("cannot open side-B sidecar: " + sc);
            nlohmann::json j = nlohmann::json::parse(scin);
            std::unordered_set<std::int64_t> raw_b;
            for (const auto& v : j.at("side_B")) raw_b.insert(v.get<std::int64_t>());
            for (std::size_t i = 0; i < dense_to_raw.size(); ++i)
                if (raw_b.count(dense_to_raw[i])) partition[i] = Side::b;
        } else {
            std::vector<bool> as_src(dense_to_raw.size(), false), as_dst(dense_to_raw.size(), false);
            for (const Event& e : events) {
                as_src[static_cast<std::size_t>(e.src)] = true;
                as_dst[static_cast<std::size_t>(e.dst)] = true;
            }
            for (std::size_t i = 0; i < dense_to_raw.size(); ++i) {
                if (as_src[i] && as_dst[i])
                    throw std::runtime_error(path + ": node with raw id " +
                                             std::to_string(dense_to_raw[i]) +
                                             " appears on both sides of the bipartite graph");
                partition[i] = as_dst[i] ? Side::b : Side::a;
            }
        }
        for (const Event& e : events) {
            if (partition[static_cast<std::size_t>(e.src)] == Side::b ||
                partition[static_cast<std::size_t>(e.dst)] == Side::a)
                throw std::runtime_error(path + ": node with raw id appears on both sides " +
                                         "(src must be side-A, dst side-B)");
        }
    }

    TemporalGraph g = TemporalGraph::from_events(std::move(events), dense_to_raw.size(),
                                                 opts.kind, opts.edge_feat_dim,
                                                 std::move(partition));
    g.set_id_map(std::move(dense_to_raw));
    return g;
}

void save_events(const TemporalGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event file: " + path);
    bool with_feat = false;
    for (const Event& e : g.events())
        if (!e.feat.empty()) { with_feat = true; break; }
    out << "src,dst,t";
    if (with_feat)
        for (int k = 1; k <= g.edge_feat_dim(); ++k) out << ",f" << k;
    out << "\n";
    for (const Event& e : g.events()) {
        out << e.src << "," << e.dst << "," << format_double(e.time);
        if (with_feat) {
            if (e.feat.empty()) {
                for (int k = 0; k < g.edge_feat_dim(); ++k) out << ",0";
            } else {
                for (double f : e.feat) out << "," << format_double(f);
            }
        }
        out << "\n";
    }
}

void write_id_map(const TemporalGraph& g, const std::string& path) {
    nlohmann::json j;
    j["dense_to_raw"] = g.id_map();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write id map: " + path);
    out << j.dump(2) << "\n";
}

std::pair<std::size_t, std::size_t> split_indices(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    auto i1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_frac));
    auto i2 = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * (spec.train_frac + spec.val_frac)));
    return {i1, i2};
}

std::tuple<TemporalGraph, TemporalGraph, TemporalGraph>
chronological_split(const TemporalGraph& g, const SplitSpec& spec) {
    if (g.events().empty()) throw std::invalid_argument("cannot split an empty event stream");
    auto [i1, i2] = split_indices(g.events().size(), spec);
    std::size_t n = g.events().size();
    if (n >= 3) {
        if (i1 == 0 || i2 == i1 || i2 == n)
            throw std::invalid_argument("split produces an empty part for a positive fraction");
    }
    auto make = [&](std::size_t lo, std::size_t hi) {
        std::vector<Event> ev(g.events().begin() + static_cast<std::ptrdiff_t>(lo),
                              g.events().begin() + static_cast<std::ptrdiff_t>(hi));
        TemporalGraph part = TemporalGraph::from_events(std::move(ev), g.num_nodes(), g.kind(),
                                                        g.edge_feat_dim(), g.partition());
        part.set_id_map(g.id_map());
        return part;
    };
    return {make(0, i1), make(i1, i2), make(i2, n)};
}

std::vector<NeighborHit> temporal_neighbors(const TemporalGraph& g, NodeId u, double t,
                                            std::size_t cap) {
    if (u < 0 || static_cast<std::size_t>(u) >= g.num_nodes())
        throw std::invalid_argument("temporal_neighbors: node id " + std::to_string(u) +
                                    " out of range (num_nodes=" + std::to_string(g.num_nodes()) +
                                    ")");
    if (t < 0.0) throw std::invalid_argument("temporal_neighbors: negative query time");
    if (cap < 1) throw std::invalid_argument("temporal_neighbors: cap must be >= 1");
    return g.neighbors_before(u, t, cap);
}

}  // namespace htgn
