#ifndef HTGN_HTSBM_HPP
#define HTGN_HTSBM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "htgn/temporal_graph.hpp"

namespace htgn {

struct PlantedHyperedge {
    std::vector<NodeId> members;        // size >= 3, within one community
    std::optional<double> activation;   // fixed time; drawn uniform when absent
};

/// Hypergraph temporal stochastic block model: community connection
/// probabilities decay as Lambda_t = Lambda0 * pi(t) with pi(t) = lambda *
/// exp(-lambda t); planted hyperedges realize all their pairwise links in a
/// burst of width `jitter_width`.
struct HtsbmParams {
    std::size_t n = 60;
    std::size_t communities = 3;
    std::vector<int> community_of;  // size n; default: contiguous equal blocks
    Eigen::MatrixXd lambda0;        // K x K, symmetric, entries in [0,1]
    double lambda = 1.0;
    double noise_scale = 1.0;
    double horizon = 100.0;
    double jitter_width = 1.0;      // burst formation width
    std::vector<PlantedHyperedge> planted;

    void validate() const;
    /// Fill community_of with contiguous equal-size blocks.
    void assign_default_communities();
};

struct HtsbmSample {
    TemporalGraph graph;
    std::set<std::vector<NodeId>> planted;  // member sets, sorted
    std::vector<double> planted_times;      // activation per params.planted entry
    std::size_t background_events = 0;
    std::size_t burst_events = 0;
};

/// Deterministic per (params, seed). Burst pair-events land at tau + U(0,
/// jitter); background pairs follow a thinned inhomogeneous Poisson stream
/// with pair intensity noise_scale * Lambda0[c_i,c_j] * lambda * exp(-lambda t).
HtsbmSample sample_htsbm(const HtsbmParams& params, std::uint64_t seed);

struct AccuracyReport {
    double precision = 1.0;
    double recall = 1.0;
    double jaccard = 1.0;
    std::size_t n_recovered = 0;
    std::size_t n_planted = 0;
};

/// Exact set-of-sets matching between recovered hyperedges (size >= 3) and
/// the planted ground truth. 0/0 counts as 1.
AccuracyReport evaluate_reconstruction(const std::set<std::vector<NodeId>>& recovered,
                                       const std::set<std::vector<NodeId>>& planted);

struct SweepCell {
    double duration = 0.0;
    std::uint64_t seed = 0;
    AccuracyReport report;
};

struct SweepSummary {
    double duration = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_jaccard = 0.0;
    double std_jaccard = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;        // duration-major, then seed
    std::vector<SweepSummary> summary;   // one row per duration
    double spearman = 0.0;               // rank corr(duration, mean jaccard)
};

/// For each snapshot duration: sample the model, stream it through the
/// homogeneous builder with time-window flushing, and score the recovered
/// size->=3 hyperedges against the planted set.
SweepResult duration_sweep(const HtsbmParams& params, const std::vector<double>& durations,
                           std::size_t seeds, std::uint64_t base_seed);

/// Spearman rank correlation with average ranks on ties.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace htgn

#endif  // HTGN_HTSBM_HPP
