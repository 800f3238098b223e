#include "htgn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace htgn {

void ModelConfig::validate() const {
    if (d_e < 0 || d_m <= 0 || d_t <= 0 || d_emb <= 0 || hidden <= 0)
        throw std::invalid_argument("model widths must be positive (d_e may be 0)");
    if (layers < 1) throw std::invalid_argument("model needs at least one embedding layer");
    if (neighbor_cap < 1) throw std::invalid_argument("neighbor cap must be >= 1");
    if (alpha <= 1.0) throw std::invalid_argument("decay base alpha must exceed 1");
    if (beta < 0.0) throw std::invalid_argument("decay rate beta must be >= 0");
}

// ---------------------------------------------------------------------------
// MemoryBank

MemoryBank::MemoryBank(int width, std::size_t slots) : width_(width) {
    if (width <= 0) throw std::invalid_argument("memory width must be positive");
    slots_.assign(slots, Eigen::VectorXd::Zero(width));
    last_update_.assign(slots, 0.0);
    live_.assign(slots, 0);
}

void MemoryBank::check_slot(int slot) const {
    if (slot < 0 || static_cast<std::size_t>(slot) >= slots_.size())
        throw std::invalid_argument("memory slot " + std::to_string(slot) + " out of range");
}

void MemoryBank::ensure_slot(int slot) {
    if (slot < 0) throw std::invalid_argument("negative memory slot");
    while (static_cast<std::size_t>(slot) >= slots_.size()) {
        slots_.push_back(Eigen::VectorXd::Zero(width_));
        last_update_.push_back(0.0);
        live_.push_back(0);
    }
}

bool MemoryBank::live(int slot) const {
    check_slot(slot);
    return live_[static_cast<std::size_t>(slot)] != 0;
}

double MemoryBank::last_update(int slot) const {
    check_slot(slot);
    return last_update_[static_cast<std::size_t>(slot)];
}

void MemoryBank::set_last_update(int slot, double t) {
    check_slot(slot);
    last_update_[static_cast<std::size_t>(slot)] = t;
}

Tensor MemoryBank::read(int slot) const {
    check_slot(slot);
    if (!live_[static_cast<std::size_t>(slot)])
        throw std::logic_error("read of unoccupied memory slot " + std::to_string(slot));
    auto it = staged_.find(slot);
    if (it != staged_.end()) return it->second;
    return Tensor::constant(slots_[static_cast<std::size_t>(slot)]);
}

const Eigen::VectorXd& MemoryBank::stored(int slot) const {
    check_slot(slot);
    return slots_[static_cast<std::size_t>(slot)];
}

void MemoryBank::stage(int slot, Tensor value) {
    check_slot(slot);
    if (value.rows() != width_ || value.cols() != 1)
        throw std::invalid_argument("staged memory value has wrong shape");
    staged_[slot] = std::move(value);
}

void MemoryBank::detach_staged() {
    for (const auto& [slot, t] : staged_)
        slots_[static_cast<std::size_t>(slot)] = t.value().col(0);
    staged_.clear();
}

void MemoryBank::write(int slot, const Eigen::VectorXd& v, double t) {
    ensure_slot(slot);
    if (v.size() != width_) throw std::invalid_argument("memory write has wrong width");
    slots_[static_cast<std::size_t>(slot)] = v;
    last_update_[static_cast<std::size_t>(slot)] = t;
    live_[static_cast<std::size_t>(slot)] = 1;
    staged_.erase(slot);
}

void MemoryBank::clear_slot(int slot) {
    check_slot(slot);
    slots_[static_cast<std::size_t>(slot)].setZero();
    last_update_[static_cast<std::size_t>(slot)] = 0.0;
    live_[static_cast<std::size_t>(slot)] = 0;
    staged_.erase(slot);
}

void MemoryBank::dump_json(const std::string& path) const {
    nlohmann::json j;
    j["width"] = width_;
    nlohmann::json slots = nlohmann::json::array();
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        nlohmann::json s;
        s["live"] = live_[i] != 0;
        s["last_update"] = last_update_[i];
        std::vector<double> v(slots_[i].data(), slots_[i].data() + slots_[i].size());
        s["value"] = std::move(v);
        slots.push_back(std::move(s));
    }
    j["slots"] = std::move(slots);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write memory bank: " + path);
    out << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// HtgnModel

namespace {

Eigen::MatrixXd xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
            m(i, j) = (2.0 * u - 1.0) * limit;
        }
    return m;
}

}  // namespace

Tensor HtgnModel::register_param(const std::string& name, Eigen::MatrixXd value) {
    Tensor t = Tensor::parameter(std::move(value), *tape_);
    params_.emplace_back(name, t);
    return t;
}

HtgnModel::HtgnModel(const ModelConfig& cfg, Tape& tape, std::uint64_t seed)
    : cfg_(cfg), tape_(&tape) {
    cfg_.validate();
    std::mt19937_64 rng(seed);

    // Geometric ladder of time scales from 1 down to 1e-4.
    Eigen::MatrixXd tw(cfg_.d_t, 1);
    for (int i = 0; i < cfg_.d_t; ++i)
        tw(i, 0) = std::pow(10.0, -4.0 * i / std::max(1, cfg_.d_t - 1));
    time_w_ = register_param("time_enc.w", tw);
    time_b_ = register_param("time_enc.b", Eigen::MatrixXd::Zero(cfg_.d_t, 1));

    merge_w1_ = register_param("merge.W1", xavier(cfg_.hidden, cfg_.d_m, rng));
    merge_b1_ = register_param("merge.b1", Eigen::MatrixXd::Zero(cfg_.hidden, 1));
    merge_w2_ = register_param("merge.W2", xavier(cfg_.d_m, cfg_.hidden, rng));
    merge_b2_ = register_param("merge.b2", Eigen::MatrixXd::Zero(cfg_.d_m, 1));

    int d_in = 2 * cfg_.d_m + cfg_.d_t + cfg_.d_e + 1;
    gru_wz_ = register_param("gru.Wz", xavier(cfg_.d_m, d_in + cfg_.d_m, rng));
    gru_bz_ = register_param("gru.bz", Eigen::MatrixXd::Zero(cfg_.d_m, 1));
    gru_wr_ = register_param("gru.Wr", xavier(cfg_.d_m, d_in + cfg_.d_m, rng));
    gru_br_ = register_param("gru.br", Eigen::MatrixXd::Zero(cfg_.d_m, 1));
    gru_wh_ = register_param("gru.Wh", xavier(cfg_.d_m, d_in + cfg_.d_m, rng));
    gru_bh_ = register_param("gru.bh", Eigen::MatrixXd::Zero(cfg_.d_m, 1));

    for (int l = 0; l < cfg_.layers; ++l) {
        int in = (l == 0 ? cfg_.d_m : cfg_.d_emb) + cfg_.d_t;
        embed_w1_.push_back(
            register_param("embed.W1." + std::to_string(l + 1), xavier(cfg_.d_emb, in, rng)));
    }
    for (int l = 1; l < cfg_.layers; ++l) {
        embed_w2_.push_back(register_param("embed.W2." + std::to_string(l + 1),
                                           xavier(cfg_.d_emb, 2 * cfg_.d_emb, rng)));
    }

    link_w1_ = register_param("link.W1", xavier(cfg_.hidden, cfg_.d_emb, rng));
    link_b1_ = register_param("link.b1", Eigen::MatrixXd::Zero(cfg_.hidden, 1));
    link_w2_ = register_param("link.W2", xavier(1, cfg_.hidden, rng));
    link_b2_ = register_param("link.b2", Eigen::MatrixXd::Zero(1, 1));

    bip_proj_ = register_param("bip.proj", xavier(cfg_.d_emb, cfg_.d_m, rng));
}

Tensor HtgnModel::time_encode(double dt) const {
    if (dt < 0.0) throw std::invalid_argument("time_encode: negative time gap");
    return cos(add(scale(time_w_, dt), time_b_));
}

Tensor HtgnModel::build_message(const Tensor& m_src, const Tensor& m_dst, double dt,
                                const Tensor& edge_feat, double hyperedge_size) const {
    return concat_rows(
        {m_src, m_dst, time_encode(dt), edge_feat, Tensor::scalar(hyperedge_size)});
}

Tensor HtgnModel::gru_update(const Tensor& f, const Tensor& m) const {
    Tensor fm = concat_rows(f, m);
    Tensor z = sigmoid(add(matmul(gru_wz_, fm), gru_bz_));
    Tensor r = sigmoid(add(matmul(gru_wr_, fm), gru_br_));
    Tensor cand = tanh(add(matmul(gru_wh_, concat_rows(f, elemwise_mul(r, m))), gru_bh_));
    Tensor ones = Tensor::constant(Eigen::MatrixXd::Ones(m.rows(), 1));
    return add(elemwise_mul(z, m), elemwise_mul(sub(ones, z), cand));
}

Tensor HtgnModel::merge_mlp(const Tensor& m) const {
    Tensor h = relu(add(matmul(merge_w1_, m), merge_b1_));
    return add(matmul(merge_w2_, h), merge_b2_);
}

Tensor HtgnModel::merged_memory(
    const std::vector<std::pair<Tensor, double>>& absorbed_with_gaps) const {
    Tensor acc = Tensor::zeros(cfg_.d_m, 1);
    for (const auto& [m, gap] : absorbed_with_gaps) {
        if (gap < 0.0) throw std::invalid_argument("merged_memory: negative time gap");
        double decay = std::pow(cfg_.alpha, -cfg_.beta * gap);
        acc = add(acc, scale(merge_mlp(m), decay));
    }
    return acc;
}

Eigen::VectorXd HtgnModel::new_pair_seed() const {
    Tape::PauseGuard guard(*tape_);
    return merge_mlp(Tensor::zeros(cfg_.d_m, 1)).value().col(0);
}

void HtgnModel::apply_merge(MemoryBank& bank, const MergeEvent& me) const {
    std::vector<std::pair<Tensor, double>> inputs;
    inputs.reserve(me.absorbed.size());
    for (const auto& a : me.absorbed) {
        if (!bank.live(a.slot))
            throw std::logic_error("apply_merge: absorbed slot " + std::to_string(a.slot) +
                                   " is unoccupied (registry/bank desync)");
        inputs.emplace_back(bank.read(a.slot), me.time - a.t_last);
    }
    Eigen::VectorXd merged = merged_memory(inputs).value().col(0);
    for (const auto& a : me.absorbed) bank.clear_slot(a.slot);
    bank.write(me.assigned_slot, merged, me.time);
}

InteractionUpdate HtgnModel::update_on_interaction(MemoryBank& bank, HyperedgeRegistry& reg,
                                                   NodeId u, NodeId v, double t,
                                                   const Eigen::VectorXd* e_uv, double dt_pair,
                                                   std::mt19937_64& rng) const {
    if (dt_pair < 0.0) throw std::invalid_argument("update_on_interaction: negative dt");
    InteractionUpdate result;

    auto pick = [&rng](const std::set<HyperedgeId>& h) {
        std::size_t idx = h.size() == 1 ? 0 : static_cast<std::size_t>(rng() % h.size());
        return *std::next(h.begin(), static_cast<std::ptrdiff_t>(idx));
    };

    bool u_covered;
    if (reg.is_bipartite()) {
        result.hyperedge_v = reg.owner_of(v);
        u_covered = reg.covered(u);
        if (u_covered) result.hyperedge_u = pick(reg.memberships(u));
    } else {
        const auto& hu = reg.memberships(u);
        const auto& hv = reg.memberships(v);
        if (hu.empty() || hv.empty())
            throw std::logic_error("update_on_interaction: node " +
                                   std::to_string(hu.empty() ? u : v) +
                                   " has no covering hyperedge (coverage invariant breach)");
        result.hyperedge_u = pick(hu);
        result.hyperedge_v = pick(hv);
        u_covered = true;
    }

    result.slot_v = reg.get(result.hyperedge_v).slot;
    double size_v = static_cast<double>(reg.get(result.hyperedge_v).members.size());
    Tensor m_v0 = bank.read(result.slot_v);

    Tensor m_u0;
    double size_u = 0.0;
    if (u_covered) {
        result.slot_u = reg.get(result.hyperedge_u).slot;
        size_u = static_cast<double>(reg.get(result.hyperedge_u).members.size());
        m_u0 = bank.read(result.slot_u);
    } else {
        m_u0 = Tensor::zeros(cfg_.d_m, 1);
    }

    Tensor e;
    if (e_uv) {
        if (e_uv->size() != cfg_.d_e)
            throw std::invalid_argument("edge feature width mismatch: expected " +
                                        std::to_string(cfg_.d_e) + ", got " +
                                        std::to_string(e_uv->size()));
        e = Tensor::constant(*e_uv);
    } else {
        e = Tensor::zeros(cfg_.d_e, 1);
    }

    // Both messages read the pre-update memories; updates apply sequentially.
    Tensor f_u = build_message(m_u0, m_v0, dt_pair, e, size_u);
    Tensor f_v = build_message(m_u0, m_v0, dt_pair, e, size_v);

    if (u_covered) {
        bank.stage(result.slot_u, gru_update(f_u, m_u0));
        bank.set_last_update(result.slot_u, t);
        reg.touch(u, result.hyperedge_u, t);
    }
    bank.stage(result.slot_v, gru_update(f_v, bank.read(result.slot_v)));
    bank.set_last_update(result.slot_v, t);
    if (reg.is_bipartite()) {
        // v is represented by E[v] rather than being a member of it; refresh
        // the initiating side-A node's recency instead when it is a member.
        const auto& members = reg.get(result.hyperedge_v).members;
        if (std::binary_search(members.begin(), members.end(), u))
            reg.touch(u, result.hyperedge_v, t);
    } else {
        reg.touch(v, result.hyperedge_v, t);
    }
    return result;
}

Tensor HtgnModel::layer_one(NodeId u, double t, const MemoryBank& bank,
                            const HyperedgeRegistry& reg) const {
    const auto& hyperedges = reg.memberships(u);
    Tensor acc = Tensor::zeros(cfg_.d_emb, 1);
    for (HyperedgeId e : hyperedges) {
        double dt = t - reg.recency(u, e);
        if (dt < 0.0) dt = 0.0;
        Tensor in = concat_rows(bank.read(reg.get(e).slot), time_encode(dt));
        acc = add(acc, matmul(embed_w1_[0], in));
    }
    return relu(acc);
}

Tensor HtgnModel::embed_recursive(NodeId u, double t, const MemoryBank& bank,
                                  const HyperedgeRegistry& reg, const TemporalGraph& g,
                                  int layer) const {
    if (layer == 1) return layer_one(u, t, bank, reg);

    Tensor h_self = embed_recursive(u, t, bank, reg, g, layer - 1);
    Tensor acc = Tensor::zeros(cfg_.d_emb, 1);
    for (const NeighborHit& nb : g.neighbors_before(u, t, cfg_.neighbor_cap)) {
        Tensor h_j = embed_recursive(nb.node, t, bank, reg, g, layer - 1);
        Tensor in = concat_rows(h_j, time_encode(t - nb.time));
        acc = add(acc, matmul(embed_w1_[static_cast<std::size_t>(layer - 1)], in));
    }
    Tensor h_agg = relu(acc);
    return matmul(embed_w2_[static_cast<std::size_t>(layer - 2)], concat_rows(h_self, h_agg));
}

Tensor HtgnModel::embed_node(NodeId u, double t, const MemoryBank& bank,
                             const HyperedgeRegistry& reg, const TemporalGraph& g,
                             int layers) const {
    int L = layers > 0 ? layers : cfg_.layers;
    if (L > cfg_.layers)
        throw std::invalid_argument("embed_node: layer count exceeds configured depth");
    return embed_recursive(u, t, bank, reg, g, L);
}

Tensor HtgnModel::link_mlp(const Tensor& x) const {
    Tensor h = relu(add(matmul(link_w1_, x), link_b1_));
    return add(matmul(link_w2_, h), link_b2_);
}

Tensor HtgnModel::link_logit_pair(const Tensor& h_u, const Tensor& h_v) const {
    if (h_u.rows() != cfg_.d_emb || h_v.rows() != cfg_.d_emb)
        throw std::invalid_argument("link_logit_pair: embedding width mismatch (" +
                                    std::to_string(h_u.rows()) + " and " +
                                    std::to_string(h_v.rows()) + " vs configured " +
                                    std::to_string(cfg_.d_emb) + ")");
    return link_mlp(elemwise_mul(h_u, h_v));
}

Tensor HtgnModel::link_logit_bipartite(const Tensor& h_u, const Tensor& m_ev) const {
    if (m_ev.rows() != cfg_.d_m)
        throw std::invalid_argument("link_logit_bipartite: memory width mismatch (" +
                                    std::to_string(m_ev.rows()) + " vs configured " +
                                    std::to_string(cfg_.d_m) + ")");
    return link_logit_pair(h_u, matmul(bip_proj_, m_ev));
}

Tensor HtgnModel::predict_link_homogeneous(const Tensor& h_u, const Tensor& h_v) const {
    return sigmoid(link_logit_pair(h_u, h_v));
}

Tensor HtgnModel::predict_link_bipartite(const Tensor& h_u, const Tensor& m_ev) const {
    return sigmoid(link_logit_bipartite(h_u, m_ev));
}

}  // namespace htgn
