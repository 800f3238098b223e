#ifndef HTGN_TEMPORAL_GRAPH_HPP
#define HTGN_TEMPORAL_GRAPH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace htgn {

using NodeId = std::int32_t;

enum class GraphKind { homogeneous, bipartite };
enum class Side : std::uint8_t { a = 0, b = 1 };

/// One timestamped interaction. `feat` is empty when the event carries no
/// edge feature; consumers substitute a zero vector of the graph's width.
struct Event {
    NodeId src = 0;
    NodeId dst = 0;
    double time = 0.0;
    std::vector<double> feat;
};

struct SplitSpec {
    double train_frac = 0.70;
    double val_frac = 0.15;
    double test_frac = 0.15;

    void validate() const;  // throws std::invalid_argument
};

struct NeighborHit {
    NodeId node = 0;
    double time = 0.0;  // latest interaction strictly before the query time
};

/// Immutable event stream over a dense node id space, sorted by time
/// (stable: file order preserved on ties). Indexes per-node histories for
/// temporal neighbor queries.
class TemporalGraph {
public:
    TemporalGraph() = default;

    /// Assemble from in-memory events. Events are stable-sorted by time,
    /// ids must already be dense in [0, num_nodes).
    static TemporalGraph from_events(std::vector<Event> events, std::size_t num_nodes,
                                     GraphKind kind, int edge_feat_dim,
                                     std::vector<Side> partition = {});

    const std::vector<Event>& events() const { return events_; }
    std::size_t num_nodes() const { return num_nodes_; }
    GraphKind kind() const { return kind_; }
    int edge_feat_dim() const { return d_e_; }

    /// Bipartite only: side of each node.
    const std::vector<Side>& partition() const { return partition_; }
    Side side_of(NodeId n) const { return partition_.at(static_cast<std::size_t>(n)); }
    const std::vector<NodeId>& side_b_nodes() const { return side_b_; }
    const std::vector<NodeId>& side_a_nodes() const { return side_a_; }

    /// Dense id -> raw id from the source file (identity for generated data).
    const std::vector<std::int64_t>& id_map() const { return dense_to_raw_; }
    void set_id_map(std::vector<std::int64_t> m) { dense_to_raw_ = std::move(m); }

    /// All (time, partner) rows touching `n`, chronological.
    const std::vector<std::pair<double, NodeId>>& history(NodeId n) const;

    /// Distinct partners of `u` that interacted strictly before `t`,
    /// most recent first, capped. Each paired with its latest time < t.
    std::vector<NeighborHit> neighbors_before(NodeId u, double t, std::size_t cap) const;

    /// Partners of `u` with an interaction at exactly time `t`.
    std::vector<NodeId> partners_at(NodeId u, double t) const;

private:
    std::vector<Event> events_;
    std::size_t num_nodes_ = 0;
    GraphKind kind_ = GraphKind::homogeneous;
    int d_e_ = 0;
    std::vector<Side> partition_;
    std::vector<NodeId> side_a_, side_b_;
    std::vector<std::int64_t> dense_to_raw_;
    std::vector<std::vector<std::pair<double, NodeId>>> history_;

    void build_index();
    void check_invariants() const;
};

/// How side-B membership is determined for bipartite CSV files.
enum class SideBRule {
    sidecar,   // JSON sidecar {"side_B":[raw ids...]} next to the CSV
    dst_only,  // every dst id is side-B, every src id is side-A
};

struct LoadOptions {
    GraphKind kind = GraphKind::homogeneous;
    int edge_feat_dim = 0;
    SideBRule side_b_rule = SideBRule::dst_only;
    std::optional<std::string> sidecar_path;  // default: <path>.side_b.json
};

/// Parse an event CSV (`src,dst,t[,f1..fd]`), densify node ids in order of
/// first appearance, stable-sort by time. Throws std::runtime_error with the
/// offending line number on malformed input.
TemporalGraph load_events(const std::string& path, const LoadOptions& opts);

/// Write the stream back out in the same CSV schema (dense ids).
void save_events(const TemporalGraph& g, const std::string& path);

/// Write the dense->raw id table as JSON.
void write_id_map(const TemporalGraph& g, const std::string& path);

/// Partition events by time order at floor(n*train) and floor(n*(train+val)).
/// All three share the id space. Throws when a positive fraction receives an
/// empty split (n >= 3).
std::tuple<TemporalGraph, TemporalGraph, TemporalGraph>
chronological_split(const TemporalGraph& g, const SplitSpec& spec);

/// Event-index boundaries of the same split, for callers that iterate ranges
/// of the full stream instead of materializing subgraphs.
std::pair<std::size_t, std::size_t> split_indices(std::size_t n, const SplitSpec& spec);

/// The <= cap distinct nodes that interacted with `u` strictly before `t`,
/// most recent first. Errors on out-of-range `u`, negative `t`, cap < 1.
std::vector<NeighborHit> temporal_neighbors(const TemporalGraph& g, NodeId u, double t,
                                            std::size_t cap);

}  // namespace htgn

#endif  // HTGN_TEMPORAL_GRAPH_HPP
