#ifndef HTGN_TRAIN_EVAL_HPP
#define HTGN_TRAIN_EVAL_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "htgn/model.hpp"
#include "htgn/optimizer.hpp"

namespace htgn {

struct BuilderConfig {
    std::size_t snapshot_edges = 200;      // b, Alg. 1 threshold
    std::optional<double> snapshot_span;   // time-window flushing when set
    std::size_t capacity = 15;             // bipartite member cap
    std::optional<double> t_prime;         // staleness; derived from data when absent
    bool pairwise_ablation = false;        // pairs only, no merges

    void validate() const;
};

struct TrainConfig {
    std::size_t batch_size = 200;
    double lr = 1e-4;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    std::size_t train_negatives = 1;   // random strategy only
    std::size_t eval_negatives = 100;  // N_neg
    double neg_mix = 0.5;              // random fraction of the eval pool
    std::size_t patience = 5;          // early stop on stale validation epochs

    void validate() const;
};

using EventRange = std::pair<std::size_t, std::size_t>;

struct EpochStats {
    std::size_t batches = 0;
    std::size_t events = 0;
    std::optional<double> mean_loss;
    double events_per_sec = 0.0;
};

struct EvalResult {
    double mrr = 0.0;
    double mrr_random = 0.0;      // rank against the random negatives only
    double mrr_historical = 0.0;  // rank against the historical negatives only
    std::size_t n_queries = 0;
    std::size_t n_queries_historical = 0;
};

struct NegativeSamples {
    std::vector<NodeId> random;
    std::vector<NodeId> historical;
};

/// ceil(k*mix) uniform random destinations plus historical ones (past
/// partners of u before t, not interacting at t, != positive). Falls back to
/// random when the history is empty. Duplicates among negatives are allowed.
NegativeSamples sample_negatives_detailed(const TemporalGraph& g, NodeId u, double t,
                                          std::size_t k, double mix, NodeId positive,
                                          std::mt19937_64& rng);
std::vector<NodeId> sample_negatives(const TemporalGraph& g, NodeId u, double t, std::size_t k,
                                     double mix, NodeId positive, std::mt19937_64& rng);

struct FootprintReport {
    int peak_slots = 0;
    std::size_t num_nodes = 0;
    double ratio = 0.0;
};

FootprintReport memory_footprint_report(const HyperedgeRegistry& reg, const TemporalGraph& g);

/// One training context: model + optimizer + the mutable pipeline state
/// (registry, snapshot, memory bank, pending batch, pair recency, rng).
/// Batch protocol per epoch:
///   commit previous batch through the differentiable message/GRU path,
///   predict and score the current batch, backward + Adam, detach memory,
///   queue the batch as pending, then apply structure updates (no-grad).
class TrainContext {
public:
    TrainContext(const TemporalGraph& graph, const ModelConfig& mcfg, const BuilderConfig& bcfg,
                 const TrainConfig& tcfg, std::uint64_t model_seed);

    HtgnModel& model() { return model_; }
    const HtgnModel& model() const { return model_; }
    const TemporalGraph& graph() const { return *graph_; }
    const HyperedgeRegistry& registry() const { return state_.registry; }
    const MemoryBank& bank() const { return state_.bank; }
    const TrainConfig& train_config() const { return tcfg_; }
    double t_prime() const { return t_prime_; }
    std::size_t skipped_self_loops() const { return skipped_self_loops_; }

    /// Fresh registry/bank/rng; pending and pair history cleared.
    void reset_state();

    EpochStats train_epoch(EventRange split);
    EvalResult evaluate_mrr(EventRange split);
    /// Consume a range without scoring (same update schedule as evaluation).
    void roll_forward(EventRange split);

    // Deep-copyable pipeline state for evaluate-then-continue protocols.
    struct StateSnapshot;
    StateSnapshot save_state() const;
    void restore_state(const StateSnapshot& s);

private:
    struct State {
        HyperedgeRegistry registry{0};
        Snapshot snapshot;
        MemoryBank bank{1};
        std::map<std::pair<NodeId, NodeId>, double> last_pair;
        std::vector<std::size_t> pending;  // event indices awaiting commit
        std::mt19937_64 select_rng;        // hyperedge selection stream
        std::size_t prune_countdown = 0;   // bipartite staleness cadence
    };

public:
    struct StateSnapshot {
        State state;
    };

private:
    const TemporalGraph* graph_;
    ModelConfig mcfg_;
    BuilderConfig bcfg_;
    TrainConfig tcfg_;
    Tape tape_;
    HtgnModel model_;
    AdamOptimizer opt_;
    double t_prime_ = 1.0;
    State state_;
    std::size_t skipped_self_loops_ = 0;

    SnapshotPolicy snapshot_policy() const;
    double pair_dt(NodeId u, NodeId v, double t) const;
    void note_pair(NodeId u, NodeId v, double t);
    void commit_pending();
    void structural_ingest(const Event& e);
    void maybe_prune(double t);
    Tensor score_logit(NodeId u, const Tensor& h_u, NodeId candidate, double t);
};

struct EpochRow {
    std::size_t epoch = 0;
    std::optional<double> train_loss;
    double val_mrr = 0.0;
    int peak_slots = 0;
    double ratio = 0.0;
    double seconds = 0.0;  // wall clock; reported out of band by default
};

struct FitResult {
    std::vector<EpochRow> rows;
    double best_val_mrr = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

/// Epoch loop with per-epoch validation and early stopping; the model ends
/// holding its best-validation weights. The callback (when given) sees each
/// finished epoch and may stop training by returning false.
FitResult fit(TrainContext& ctx, EventRange train, EventRange val,
              const std::function<bool(const EpochRow&)>& on_epoch = {});

}  // namespace htgn

#endif  // HTGN_TRAIN_EVAL_HPP
