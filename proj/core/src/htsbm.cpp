#include "htgn/htsbm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "htgn/hyperedge_builder.hpp"

namespace htgn {

void HtsbmParams::assign_default_communities() {
    community_of.resize(n);
    std::size_t base = n / communities;
    std::size_t extra = n % communities;
    std::size_t at = 0;
    for (std::size_t c = 0; c < communities; ++c) {
        std::size_t size = base + (c < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) community_of[at++] = static_cast<int>(c);
    }
}

void HtsbmParams::validate() const {
    if (n == 0) throw std::invalid_argument("htsbm: n must be positive");
    if (communities == 0 || communities > n)
        throw std::invalid_argument("htsbm: invalid community count");
    if (community_of.size() != n)
        throw std::invalid_argument("htsbm: community_of must have one entry per node");
    for (int c : community_of)
        if (c < 0 || static_cast<std::size_t>(c) >= communities)
            throw std::invalid_argument("htsbm: community index out of range");
    if (lambda0.rows() != static_cast<Eigen::Index>(communities) ||
        lambda0.cols() != static_cast<Eigen::Index>(communities))
        throw std::invalid_argument("htsbm: lambda0 must be K x K");
    if (!lambda0.isApprox(lambda0.transpose(), 1e-12))
        throw std::invalid_argument("htsbm: lambda0 must be symmetric");
    if ((lambda0.array() < 0.0).any() || (lambda0.array() > 1.0).any())
        throw std::invalid_argument("htsbm: lambda0 entries must lie in [0,1]");
    if (lambda <= 0.0) throw std::invalid_argument("htsbm: lambda must be positive");
    if (noise_scale < 0.0) throw std::invalid_argument("htsbm: noise_scale must be >= 0");
    if (horizon <= 0.0) throw std::invalid_argument("htsbm: horizon must be positive");
    if (jitter_width <= 0.0 || jitter_width > horizon)
        throw std::invalid_argument("htsbm: jitter_width must lie in (0, horizon]");
    for (const auto& p : planted) {
        if (p.members.size() < 3)
            throw std::invalid_argument("htsbm: planted hyperedges must have size >= 3");
        std::set<NodeId> uniq(p.members.begin(), p.members.end());
        if (uniq.size() != p.members.size())
            throw std::invalid_argument("htsbm: planted members must be distinct");
        int comm = -1;
        for (NodeId m : p.members) {
            if (m < 0 || static_cast<std::size_t>(m) >= n)
                throw std::invalid_argument("htsbm: planted member out of range");
            int c = community_of[static_cast<std::size_t>(m)];
            if (comm == -1) comm = c;
            if (c != comm)
                throw std::invalid_argument("htsbm: planted hyperedge spans communities");
        }
        if (p.activation && (*p.activation < 0.0 || *p.activation > horizon))
            throw std::invalid_argument("htsbm: planted activation outside [0, horizon]");
    }
}

namespace {

double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw; avoids distribution-implementation differences.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace

HtsbmSample sample_htsbm(const HtsbmParams& params, std::uint64_t seed) {
    params.validate();
    std::mt19937_64 rng(seed);

    HtsbmSample out;
    std::vector<Event> events;

    // Planted bursts: one activation each, all pairwise links within the
    // formation width.
    for (const auto& p : params.planted) {
        double span = std::max(params.horizon - params.jitter_width, 0.0);
        double tau = p.activation ? *p.activation : uniform01(rng) * span;
        out.planted_times.push_back(tau);
        std::vector<NodeId> members = p.members;
        std::sort(members.begin(), members.end());
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                Event e;
                e.src = members[i];
                e.dst = members[j];
                e.time = tau + uniform01(rng) * params.jitter_width;
                events.push_back(e);
                ++out.burst_events;
            }
        }
        out.planted.insert(std::move(members));
    }

    // Background: thinned inhomogeneous Poisson over all node pairs. The
    // majorant per pair is noise * lambda * max(Lambda0); candidates are
    // accepted with probability (Lambda0[ci,cj]/maxL) * exp(-lambda t).
    double max_l = params.lambda0.maxCoeff();
    std::size_t n_pairs = params.n * (params.n - 1) / 2;
    double majorant = params.noise_scale * params.lambda * max_l * static_cast<double>(n_pairs);
    if (majorant > 0.0) {
        double t = 0.0;
        while (true) {
            t += exponential(rng, majorant);
            if (t > params.horizon) break;
            // Uniform unordered pair via (i,j) rejection-free index decode.
            std::uint64_t k = rng() % n_pairs;
            std::size_t i = 0;
            std::size_t row_len = params.n - 1;
            while (k >= row_len) {
                k -= row_len;
                --row_len;
                ++i;
            }
            std::size_t j = i + 1 + k;
            int ci = params.community_of[i], cj = params.community_of[j];
            double accept = (params.lambda0(ci, cj) / max_l) * std::exp(-params.lambda * t);
            if (uniform01(rng) < accept) {
                Event e;
                e.src = static_cast<NodeId>(i);
                e.dst = static_cast<NodeId>(j);
                e.time = t;
                events.push_back(e);
                ++out.background_events;
            }
        }
    }

    if (events.empty())
        std::cerr << "htsbm: warning: empty event stream (horizon too small for lambda?)\n";

    out.graph = TemporalGraph::from_events(std::move(events), params.n,
                                           GraphKind::homogeneous, 0);
    return out;
}

AccuracyReport evaluate_reconstruction(const std::set<std::vector<NodeId>>& recovered,
                                       const std::set<std::vector<NodeId>>& planted) {
    AccuracyReport r;
    r.n_recovered = recovered.size();
    r.n_planted = planted.size();
    std::size_t hits = 0;
    for (const auto& h : recovered)
        if (planted.count(h)) ++hits;
    std::size_t uni = recovered.size() + planted.size() - hits;
    r.precision = recovered.empty() ? 1.0
                                    : static_cast<double>(hits) / static_cast<double>(recovered.size());
    r.recall = planted.empty() ? 1.0
                               : static_cast<double>(hits) / static_cast<double>(planted.size());
    r.jaccard = uni == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(uni);
    return r;
}

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

SweepResult duration_sweep(const HtsbmParams& params, const std::vector<double>& durations,
                           std::size_t seeds, std::uint64_t base_seed) {
    if (durations.empty()) throw std::invalid_argument("duration_sweep: no durations");
    if (!std::is_sorted(durations.begin(), durations.end()))
        throw std::invalid_argument("duration_sweep: durations must be sorted ascending");
    if (seeds == 0) throw std::invalid_argument("duration_sweep: need at least one seed");

    SweepResult result;
    std::vector<double> mean_jaccards;
    for (double d : durations) {
        std::vector<double> jaccards;
        SweepSummary s;
        s.duration = d;
        for (std::size_t k = 0; k < seeds; ++k) {
            std::uint64_t seed = base_seed + k;
            HtsbmSample sample = sample_htsbm(params, seed);

            HyperedgeRegistry reg(params.n);
            Snapshot snap;
            SnapshotPolicy policy;
            policy.max_edges = std::numeric_limits<std::size_t>::max();
            policy.max_span = d;
            for (const Event& e : sample.graph.events())
                ingest_link_homogeneous(reg, snap, e.src, e.dst, e.time, policy);
            if (!snap.empty()) flush_snapshot(reg, snap, snap.last_time());

            std::set<std::vector<NodeId>> recovered;
            for (const auto& [id, he] : reg.live())
                if (he.members.size() >= 3) recovered.insert(he.members);

            AccuracyReport rep = evaluate_reconstruction(recovered, sample.planted);
            result.cells.push_back({d, seed, rep});
            jaccards.push_back(rep.jaccard);
            s.mean_precision += rep.precision;
            s.mean_recall += rep.recall;
        }
        double mean = std::accumulate(jaccards.begin(), jaccards.end(), 0.0) /
                      static_cast<double>(jaccards.size());
        double var = 0.0;
        for (double j : jaccards) var += (j - mean) * (j - mean);
        var /= static_cast<double>(jaccards.size());
        s.mean_jaccard = mean;
        s.std_jaccard = std::sqrt(var);
        s.mean_precision /= static_cast<double>(seeds);
        s.mean_recall /= static_cast<double>(seeds);
        result.summary.push_back(s);
        mean_jaccards.push_back(mean);
    }
    std::vector<double> ds(durations.begin(), durations.end());
    result.spearman = spearman_correlation(ds, mean_jaccards);
    return result;
}

}  // namespace htgn
