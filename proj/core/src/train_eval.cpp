#include "htgn/train_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace htgn {

void BuilderConfig::validate() const {
    if (snapshot_edges == 0) throw std::invalid_argument("snapshot threshold b must be positive");
    if (snapshot_span && *snapshot_span <= 0.0)
        throw std::invalid_argument("snapshot span must be positive");
    if (capacity == 0) throw std::invalid_argument("bipartite capacity must be positive");
    if (t_prime && *t_prime <= 0.0) throw std::invalid_argument("t_prime must be positive");
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
    if (train_negatives == 0 || eval_negatives == 0)
        throw std::invalid_argument("negative counts must be positive");
    if (neg_mix < 0.0 || neg_mix > 1.0)
        throw std::invalid_argument("neg_mix must lie in [0,1]");
    if (patience == 0) throw std::invalid_argument("patience must be positive");
}

namespace {

NodeId draw_excluding(const std::vector<NodeId>* pool, std::size_t pool_size, NodeId skip1,
                      NodeId skip2, std::mt19937_64& rng) {
    // Uniform over the pool minus up to two excluded ids, by index remapping.
    NodeId lo = std::min(skip1, skip2), hi = std::max(skip1, skip2);
    auto member = [&](NodeId x) {
        return pool ? std::binary_search(pool->begin(), pool->end(), x)
                    : (x >= 0 && static_cast<std::size_t>(x) < pool_size);
    };
    std::size_t excluded = (member(lo) ? 1u : 0u) + (hi != lo && member(hi) ? 1u : 0u);
    if (pool_size <= excluded)
        throw std::runtime_error("sample_negatives: no valid candidate destinations");
    std::size_t idx = static_cast<std::size_t>(rng() % (pool_size - excluded));
    auto at = [&](std::size_t i) { return pool ? (*pool)[i] : static_cast<NodeId>(i); };
    // Shift the draw past the (sorted) pool positions of the excluded ids.
    std::size_t pos = idx;
    if (member(lo)) {
        std::size_t lo_pos = pool ? static_cast<std::size_t>(
                                        std::lower_bound(pool->begin(), pool->end(), lo) -
                                        pool->begin())
                                  : static_cast<std::size_t>(lo);
        if (pos >= lo_pos) ++pos;
    }
    if (hi != lo && member(hi)) {
        std::size_t hi_pos = pool ? static_cast<std::size_t>(
                                        std::lower_bound(pool->begin(), pool->end(), hi) -
                                        pool->begin())
                                  : static_cast<std::size_t>(hi);
        if (pos >= hi_pos) ++pos;
    }
    return at(pos);
}

}  // namespace

NegativeSamples sample_negatives_detailed(const TemporalGraph& g, NodeId u, double t,
                                          std::size_t k, double mix, NodeId positive,
                                          std::mt19937_64& rng) {
    if (k == 0) throw std::invalid_argument("sample_negatives: k must be >= 1");
    if (mix < 0.0 || mix > 1.0) throw std::invalid_argument("sample_negatives: bad mix");

    const std::vector<NodeId>* pool = nullptr;
    std::size_t pool_size = g.num_nodes();
    if (g.kind() == GraphKind::bipartite) {
        pool = &g.side_b_nodes();
        pool_size = pool->size();
    }

    std::size_t n_random = static_cast<std::size_t>(
        std::ceil(static_cast<double>(k) * mix));
    n_random = std::min(n_random, k);
    std::size_t n_hist = k - n_random;

    // Historical candidates: partners strictly before t, excluding the
    // positive and anyone interacting with u at exactly t.
    std::vector<NodeId> hist;
    if (n_hist > 0) {
        auto before = g.neighbors_before(u, t, std::numeric_limits<std::size_t>::max());
        auto at_t = g.partners_at(u, t);
        std::sort(at_t.begin(), at_t.end());
        for (const NeighborHit& nb : before) {
            if (nb.node == positive || nb.node == u) continue;
            if (std::binary_search(at_t.begin(), at_t.end(), nb.node)) continue;
            hist.push_back(nb.node);
        }
        std::sort(hist.begin(), hist.end());
    }
    if (hist.empty()) {
        n_random = k;  // fallback
        n_hist = 0;
    }

    NegativeSamples out;
    out.random.reserve(n_random);
    out.historical.reserve(n_hist);
    for (std::size_t i = 0; i < n_random; ++i)
        out.random.push_back(draw_excluding(pool, pool_size, u, positive, rng));
    for (std::size_t i = 0; i < n_hist; ++i)
        out.historical.push_back(hist[static_cast<std::size_t>(rng() % hist.size())]);
    return out;
}

std::vector<NodeId> sample_negatives(const TemporalGraph& g, NodeId u, double t, std::size_t k,
                                     double mix, NodeId positive, std::mt19937_64& rng) {
    NegativeSamples s = sample_negatives_detailed(g, u, t, k, mix, positive, rng);
    std::vector<NodeId> out = std::move(s.random);
    out.insert(out.end(), s.historical.begin(), s.historical.end());
    return out;
}

FootprintReport memory_footprint_report(const HyperedgeRegistry& reg, const TemporalGraph& g) {
    FootprintReport r;
    r.peak_slots = reg.peak_slots();
    r.num_nodes = g.num_nodes();
    r.ratio = g.num_nodes() == 0
                  ? 0.0
                  : static_cast<double>(r.peak_slots) / static_cast<double>(g.num_nodes());
    return r;
}

// ---------------------------------------------------------------------------
// TrainContext

TrainContext::TrainContext(const TemporalGraph& graph, const ModelConfig& mcfg,
                           const BuilderConfig& bcfg, const TrainConfig& tcfg,
                           std::uint64_t model_seed)
    : graph_(&graph),
      mcfg_(mcfg),
      bcfg_(bcfg),
      tcfg_(tcfg),
      model_(mcfg, tape_, model_seed),
      opt_([this] {
          std::vector<Tensor> ps;
          for (auto& [name, t] : model_.params()) ps.push_back(t);
          return ps;
      }(), AdamConfig{tcfg.lr}) {
    bcfg_.validate();
    tcfg_.validate();
    if (graph.edge_feat_dim() != mcfg_.d_e)
        throw std::invalid_argument("graph edge-feature width " +
                                    std::to_string(graph.edge_feat_dim()) +
                                    " does not match model d_e " + std::to_string(mcfg_.d_e));

    if (bcfg_.t_prime) {
        t_prime_ = *bcfg_.t_prime;
    } else {
        // Median inter-event gap of the training split, scaled by the
        // bipartite capacity.
        auto [i1, i2] = split_indices(graph.events().size(), SplitSpec{});
        (void)i2;
        std::vector<double> gaps;
        for (std::size_t i = 1; i < std::max<std::size_t>(i1, 2); ++i)
            gaps.push_back(graph.events()[i].time - graph.events()[i - 1].time);
        if (gaps.empty()) {
            t_prime_ = 1.0;
        } else {
            std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                             gaps.end());
            double median = gaps[gaps.size() / 2];
            t_prime_ = std::max(median, 1e-12) * static_cast<double>(bcfg_.capacity);
        }
    }
    reset_state();
}

void TrainContext::reset_state() {
    if (graph_->kind() == GraphKind::bipartite) {
        state_.registry = HyperedgeRegistry::bipartite(graph_->num_nodes(),
                                                       graph_->side_b_nodes());
        state_.bank = MemoryBank(mcfg_.d_m, graph_->side_b_nodes().size());
        // Fixed hyperedges start occupied with zero memory.
        for (const auto& [id, e] : state_.registry.live())
            state_.bank.write(e.slot, Eigen::VectorXd::Zero(mcfg_.d_m), 0.0);
    } else {
        state_.registry = HyperedgeRegistry(graph_->num_nodes());
        state_.bank = MemoryBank(mcfg_.d_m, 0);
    }
    state_.snapshot = Snapshot();
    state_.last_pair.clear();
    state_.pending.clear();
    state_.select_rng.seed(tcfg_.seed * 0x9E3779B97F4A7C15ull + 1);
    state_.prune_countdown = tcfg_.batch_size;
    tape_.clear();
}

TrainContext::StateSnapshot TrainContext::save_state() const {
    if (state_.bank.has_staged())
        throw std::logic_error("save_state with staged memory (mid-batch)");
    return StateSnapshot{state_};
}

void TrainContext::restore_state(const StateSnapshot& s) { state_ = s.state; }

SnapshotPolicy TrainContext::snapshot_policy() const {
    SnapshotPolicy p;
    p.max_edges = bcfg_.snapshot_edges;
    p.max_span = bcfg_.snapshot_span;
    return p;
}

double TrainContext::pair_dt(NodeId u, NodeId v, double t) const {
    auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
    auto it = state_.last_pair.find(key);
    return it == state_.last_pair.end() ? 0.0 : t - it->second;
}

void TrainContext::note_pair(NodeId u, NodeId v, double t) {
    auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
    state_.last_pair[key] = t;
}

void TrainContext::commit_pending() {
    for (std::size_t idx : state_.pending) {
        const Event& e = graph_->events()[idx];
        double dt = pair_dt(e.src, e.dst, e.time);
        Eigen::VectorXd feat;
        const Eigen::VectorXd* fp = nullptr;
        if (!e.feat.empty()) {
            feat = Eigen::Map<const Eigen::VectorXd>(e.feat.data(),
                                                     static_cast<Eigen::Index>(e.feat.size()));
            fp = &feat;
        }
        model_.update_on_interaction(state_.bank, state_.registry, e.src, e.dst, e.time, fp, dt,
                                     state_.select_rng);
        note_pair(e.src, e.dst, e.time);
    }
    state_.pending.clear();
}

void TrainContext::structural_ingest(const Event& e) {
    if (graph_->kind() == GraphKind::bipartite) {
        ingest_link_bipartite(state_.registry, e.src, e.dst, e.time, bcfg_.capacity, t_prime_);
        return;
    }
    if (bcfg_.pairwise_ablation) {
        auto created = ingest_link_pairwise(state_.registry, e.src, e.dst, e.time);
        if (created) {
            int slot = state_.registry.get(*created).slot;
            state_.bank.ensure_slot(slot);
            state_.bank.write(slot, model_.new_pair_seed(), e.time);
        }
        return;
    }
    IngestResult res =
        ingest_link_homogeneous(state_.registry, state_.snapshot, e.src, e.dst, e.time,
                                snapshot_policy());
    auto apply = [&](const std::vector<MergeEvent>& merges) {
        for (const MergeEvent& me : merges) {
            state_.bank.ensure_slot(me.assigned_slot);
            model_.apply_merge(state_.bank, me);
        }
    };
    apply(res.window_merges);
    if (res.new_pair) {
        int slot = state_.registry.get(*res.new_pair).slot;
        state_.bank.ensure_slot(slot);
        state_.bank.write(slot, model_.new_pair_seed(), e.time);
    }
    apply(res.batch_merges);
}

void TrainContext::maybe_prune(double t) {
    if (graph_->kind() != GraphKind::bipartite) return;
    if (state_.prune_countdown > 0) {
        --state_.prune_countdown;
        return;
    }
    prune_stale_memberships(state_.registry, t, t_prime_);
    state_.prune_countdown = tcfg_.batch_size;
}

Tensor TrainContext::score_logit(NodeId u, const Tensor& h_u, NodeId candidate, double t) {
    if (graph_->kind() == GraphKind::bipartite) {
        int slot = state_.registry.get(state_.registry.owner_of(candidate)).slot;
        return model_.link_logit_bipartite(h_u, state_.bank.read(slot));
    }
    Tensor h_c = model_.embed_node(candidate, t, state_.bank, state_.registry, *graph_);
    return model_.link_logit_pair(h_u, h_c);
}

EpochStats TrainContext::train_epoch(EventRange split) {
    auto started = std::chrono::steady_clock::now();
    EpochStats stats;
    double loss_weighted = 0.0;
    std::size_t loss_events = 0;
    std::mt19937_64 neg_rng(tcfg_.seed * 0x2545F4914F6CDD1Dull + 17);

    const auto& events = graph_->events();
    for (std::size_t at = split.first; at < split.second; at += tcfg_.batch_size) {
        std::size_t end = std::min(at + tcfg_.batch_size, split.second);
        std::size_t batch_index = stats.batches;

        // (1) commit: previous batch flows through the differentiable path.
        commit_pending();

        // (2) predict and accumulate BCE over positive + sampled negatives.
        std::vector<Tensor> logits;
        std::vector<double> targets;
        for (std::size_t i = at; i < end; ++i) {
            const Event& e = events[i];
            if (e.src == e.dst) {
                if (skipped_self_loops_++ == 0)
                    std::cerr << "train: skipping self-loop event(s)\n";
                continue;
            }
            Tensor h_u = model_.embed_node(e.src, e.time, state_.bank, state_.registry, *graph_);
            logits.push_back(score_logit(e.src, h_u, e.dst, e.time));
            targets.push_back(1.0);
            for (NodeId w : sample_negatives(*graph_, e.src, e.time, tcfg_.train_negatives,
                                             /*mix=*/1.0, e.dst, neg_rng)) {
                logits.push_back(score_logit(e.src, h_u, w, e.time));
                targets.push_back(0.0);
            }
        }

        if (!logits.empty()) {
            Eigen::MatrixXd y(static_cast<Eigen::Index>(targets.size()), 1);
            for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, 0) = targets[static_cast<std::size_t>(i)];
            Tensor loss = reduce_mean(bce_with_logits(concat_rows(logits), y));
            double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                const Event& e = events[at];
                throw std::runtime_error(
                    "non-finite training loss at batch " + std::to_string(batch_index) +
                    " (first event: " + std::to_string(e.src) + "," + std::to_string(e.dst) +
                    "," + std::to_string(e.time) + ")");
            }
            backward(loss);
            opt_.step();
            loss_weighted += loss_value * static_cast<double>(end - at);
            loss_events += end - at;
        } else {
            tape_.clear();
        }

        // (4) persist memory as constants; queue this batch for commit.
        state_.bank.detach_staged();
        state_.pending.clear();
        for (std::size_t i = at; i < end; ++i)
            if (events[i].src != events[i].dst) state_.pending.push_back(i);

        // (5) structure updates, outside the tape.
        {
            Tape::PauseGuard guard(tape_);
            for (std::size_t i = at; i < end; ++i) {
                const Event& e = events[i];
                if (e.src == e.dst) continue;
                structural_ingest(e);
            }
            if (graph_->kind() == GraphKind::bipartite && end > at)
                prune_stale_memberships(state_.registry, events[end - 1].time, t_prime_);
        }

        ++stats.batches;
        stats.events += end - at;
    }

    if (loss_events > 0) stats.mean_loss = loss_weighted / static_cast<double>(loss_events);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    stats.events_per_sec = secs > 0.0 ? static_cast<double>(stats.events) / secs : 0.0;
    return stats;
}

EvalResult TrainContext::evaluate_mrr(EventRange split) {
    if (split.first >= split.second)
        throw std::invalid_argument("evaluate_mrr: empty split");
    Tape::PauseGuard guard(tape_);
    commit_pending();
    state_.bank.detach_staged();

    std::mt19937_64 eval_rng(tcfg_.seed * 0x9E3779B97F4A7C15ull + 101);
    EvalResult r;
    double rr_sum = 0.0, rr_rand_sum = 0.0, rr_hist_sum = 0.0;

    const auto& events = graph_->events();
    for (std::size_t i = split.first; i < split.second; ++i) {
        const Event& e = events[i];
        if (e.src == e.dst) continue;

        Tensor h_u = model_.embed_node(e.src, e.time, state_.bank, state_.registry, *graph_);
        double pos = score_logit(e.src, h_u, e.dst, e.time).item();
        NegativeSamples negs =
            sample_negatives_detailed(*graph_, e.src, e.time, tcfg_.eval_negatives,
                                      tcfg_.neg_mix, e.dst, eval_rng);
        auto count_geq = [&](const std::vector<NodeId>& pool) {
            std::size_t c = 0;
            for (NodeId w : pool)
                if (score_logit(e.src, h_u, w, e.time).item() >= pos) ++c;  // ties pessimistic
            return c;
        };
        std::size_t over_rand = count_geq(negs.random);
        std::size_t over_hist = count_geq(negs.historical);
        rr_sum += 1.0 / static_cast<double>(1 + over_rand + over_hist);
        rr_rand_sum += 1.0 / static_cast<double>(1 + over_rand);
        if (!negs.historical.empty()) {
            rr_hist_sum += 1.0 / static_cast<double>(1 + over_hist);
            ++r.n_queries_historical;
        }
        ++r.n_queries;

        // Memory/structure consume the true event only after scoring.
        double dt = pair_dt(e.src, e.dst, e.time);
        Eigen::VectorXd feat;
        const Eigen::VectorXd* fp = nullptr;
        if (!e.feat.empty()) {
            feat = Eigen::Map<const Eigen::VectorXd>(e.feat.data(),
                                                     static_cast<Eigen::Index>(e.feat.size()));
            fp = &feat;
        }
        model_.update_on_interaction(state_.bank, state_.registry, e.src, e.dst, e.time, fp, dt,
                                     state_.select_rng);
        state_.bank.detach_staged();
        note_pair(e.src, e.dst, e.time);
        structural_ingest(e);
        maybe_prune(e.time);
    }
    if (r.n_queries == 0) throw std::invalid_argument("evaluate_mrr: no scorable events");
    r.mrr = rr_sum / static_cast<double>(r.n_queries);
    r.mrr_random = rr_rand_sum / static_cast<double>(r.n_queries);
    r.mrr_historical = r.n_queries_historical == 0
                           ? 0.0
                           : rr_hist_sum / static_cast<double>(r.n_queries_historical);
    return r;
}

void TrainContext::roll_forward(EventRange split) {
    Tape::PauseGuard guard(tape_);
    commit_pending();
    state_.bank.detach_staged();
    const auto& events = graph_->events();
    for (std::size_t i = split.first; i < split.second; ++i) {
        const Event& e = events[i];
        if (e.src == e.dst) continue;
        double dt = pair_dt(e.src, e.dst, e.time);
        Eigen::VectorXd feat;
        const Eigen::VectorXd* fp = nullptr;
        if (!e.feat.empty()) {
            feat = Eigen::Map<const Eigen::VectorXd>(e.feat.data(),
                                                     static_cast<Eigen::Index>(e.feat.size()));
            fp = &feat;
        }
        model_.update_on_interaction(state_.bank, state_.registry, e.src, e.dst, e.time, fp, dt,
                                     state_.select_rng);
        state_.bank.detach_staged();
        note_pair(e.src, e.dst, e.time);
        structural_ingest(e);
        maybe_prune(e.time);
    }
}

FitResult fit(TrainContext& ctx, EventRange train, EventRange val,
              const std::function<bool(const EpochRow&)>& on_epoch) {
    FitResult result;
    std::vector<Eigen::MatrixXd> best_params;
    std::size_t stale = 0;
    const TrainConfig& cfg = ctx.train_config();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto started = std::chrono::steady_clock::now();
        ctx.reset_state();
        EpochStats stats = ctx.train_epoch(train);
        FootprintReport fp = memory_footprint_report(ctx.registry(), ctx.graph());

        auto backup = ctx.save_state();
        EvalResult ev = ctx.evaluate_mrr(val);
        ctx.restore_state(backup);

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = stats.mean_loss;
        row.val_mrr = ev.mrr;
        row.peak_slots = fp.peak_slots;
        row.ratio = fp.ratio;
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.rows.push_back(row);
        result.epochs_run = epoch;

        bool stop = false;
        if (ev.mrr > result.best_val_mrr || best_params.empty()) {
            result.best_val_mrr = ev.mrr;
            result.best_epoch = epoch;
            best_params.clear();
            for (const auto& [name, t] : ctx.model().params()) best_params.push_back(t.value());
            stale = 0;
        } else if (++stale >= cfg.patience) {
            stop = true;
        }
        if (on_epoch && !on_epoch(row)) stop = true;
        if (stop) break;
    }

    if (!best_params.empty()) {
        std::size_t i = 0;
        for (auto& [name, t] : ctx.model().params()) t.set_value(best_params[i++]);
    }
    return result;
}

}  // namespace htgn
