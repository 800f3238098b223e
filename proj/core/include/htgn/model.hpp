#ifndef HTGN_MODEL_HPP
#define HTGN_MODEL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "htgn/checkpoint.hpp"
#include "htgn/hyperedge_builder.hpp"
#include "htgn/hyperedge_registry.hpp"
#include "htgn/temporal_graph.hpp"
#include "htgn/tensor.hpp"

namespace htgn {

struct ModelConfig {
    int d_e = 175;                  // edge feature width
    int d_m = 175;                  // memory width
    int d_t = 100;                  // time-encoding width
    int d_emb = 100;                // node embedding width
    int hidden = 100;               // MLP hidden width
    int layers = 2;                 // embedding layers L (k-hop receptive field)
    std::size_t neighbor_cap = 20;  // temporal neighbors per node
    double alpha = 2.0;             // decay base
    double beta = 1e-4;             // decay rate

    void validate() const;
};

/// z fixed-width memory slots tracking hyperedge features, plus a per-batch
/// overlay of tape tensors staged by GRU updates. Persisted values are plain
/// constants; detach_staged() folds the overlay back into them.
class MemoryBank {
public:
    explicit MemoryBank(int width, std::size_t slots = 0);

    int width() const { return width_; }
    std::size_t size() const { return slots_.size(); }
    void ensure_slot(int slot);

    bool live(int slot) const;
    double last_update(int slot) const;
    void set_last_update(int slot, double t);

    /// Current value of an occupied slot: the staged tensor when one exists,
    /// otherwise the persisted constant.
    Tensor read(int slot) const;
    const Eigen::VectorXd& stored(int slot) const;

    void stage(int slot, Tensor value);
    bool has_staged() const { return !staged_.empty(); }
    /// Persist staged values as constants and drop the overlay.
    void detach_staged();

    /// Occupy a slot with a concrete value (detached).
    void write(int slot, const Eigen::VectorXd& v, double t);
    /// Zero and free a slot.
    void clear_slot(int slot);

    void dump_json(const std::string& path) const;

private:
    int width_ = 0;
    std::vector<Eigen::VectorXd> slots_;
    std::vector<double> last_update_;
    std::vector<char> live_;
    std::map<int, Tensor> staged_;

    void check_slot(int slot) const;
};

struct InteractionUpdate {
    int slot_u = -1;  // -1 when the u side was skipped (uncovered, bipartite)
    int slot_v = -1;
    HyperedgeId hyperedge_u = -1;
    HyperedgeId hyperedge_v = -1;
};

/// All learnable state and the forward functions of the network: cosine time
/// encoding, decay-weighted merge aggregation, message+GRU memory updates,
/// hypergraph-convolution embeddings, and the two link predictors.
class HtgnModel {
public:
    HtgnModel(const ModelConfig& cfg, Tape& tape, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    Tape& tape() const { return *tape_; }
    NamedTensors& params() { return params_; }
    const NamedTensors& params() const { return params_; }

    /// phi(dt): component i is cos(w_i * dt + b_i). Throws on dt < 0.
    Tensor time_encode(double dt) const;

    /// Message vector: concat(m_src, m_dst, phi(dt), e_uv, |E| as a scalar).
    Tensor build_message(const Tensor& m_src, const Tensor& m_dst, double dt,
                         const Tensor& edge_feat, double hyperedge_size) const;

    /// GRU memory update m' = mem(f, m); the update gate interpolates
    /// toward the old memory (gate at 1 freezes it).
    Tensor gru_update(const Tensor& f, const Tensor& m) const;

    Tensor merge_mlp(const Tensor& m) const;

    /// Decay-weighted aggregation of absorbed memories: sum of
    /// merge_mlp(m) * alpha^(-beta * gap), fixed order by input position.
    Tensor merged_memory(const std::vector<std::pair<Tensor, double>>& absorbed_with_gaps) const;

    /// Seed value for a brand-new pair hyperedge's slot: merge_mlp(0).
    Eigen::VectorXd new_pair_seed() const;

    /// Fold one MergeEvent into the bank: aggregate the absorbed slots with
    /// the decay weights, zero and free them, occupy the assigned slot.
    /// Throws std::logic_error when an absorbed slot is unoccupied.
    void apply_merge(MemoryBank& bank, const MergeEvent& me) const;

    /// Eqs. for one interaction: select E_u/E_v, build both messages from the
    /// pre-update memories, stage the GRU outputs, refresh recency and
    /// last-update stamps. `dt_pair` is the time since u and v last
    /// interacted (0 when never).
    InteractionUpdate update_on_interaction(MemoryBank& bank, HyperedgeRegistry& reg, NodeId u,
                                            NodeId v, double t, const Eigen::VectorXd* e_uv,
                                            double dt_pair, std::mt19937_64& rng) const;

    /// Layer-1 hyperedge aggregation followed by layers of temporal-neighbor
    /// convolution; `layers` <= 0 uses the configured L. Uncovered nodes have
    /// a zero layer-1 embedding.
    Tensor embed_node(NodeId u, double t, const MemoryBank& bank, const HyperedgeRegistry& reg,
                      const TemporalGraph& g, int layers = 0) const;

    Tensor link_logit_pair(const Tensor& h_u, const Tensor& h_v) const;
    Tensor link_logit_bipartite(const Tensor& h_u, const Tensor& m_ev) const;
    Tensor predict_link_homogeneous(const Tensor& h_u, const Tensor& h_v) const;
    Tensor predict_link_bipartite(const Tensor& h_u, const Tensor& m_ev) const;

private:
    ModelConfig cfg_;
    Tape* tape_ = nullptr;
    NamedTensors params_;

    // Named views into params_.
    Tensor time_w_, time_b_;
    Tensor merge_w1_, merge_b1_, merge_w2_, merge_b2_;
    Tensor gru_wz_, gru_bz_, gru_wr_, gru_br_, gru_wh_, gru_bh_;
    std::vector<Tensor> embed_w1_;  // [0..L-1]
    std::vector<Tensor> embed_w2_;  // [1..L-1], index l-1 used for layer l+1
    Tensor link_w1_, link_b1_, link_w2_, link_b2_;
    Tensor bip_proj_;

    Tensor register_param(const std::string& name, Eigen::MatrixXd value);
    Tensor link_mlp(const Tensor& x) const;
    Tensor layer_one(NodeId u, double t, const MemoryBank& bank,
                     const HyperedgeRegistry& reg) const;
    Tensor embed_recursive(NodeId u, double t, const MemoryBank& bank,
                           const HyperedgeRegistry& reg, const TemporalGraph& g, int layer) const;
};

}  // namespace htgn

#endif  // HTGN_MODEL_HPP
