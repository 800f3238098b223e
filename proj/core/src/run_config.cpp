#include "htgn/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace htgn {

using nlohmann::json;

HtsbmParams HtsbmConfig::materialize() const {
    HtsbmParams p;
    p.n = n;
    p.communities = communities;
    p.assign_default_communities();
    p.lambda0 = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(communities),
                                          static_cast<Eigen::Index>(communities),
                                          lambda0_offdiag);
    for (Eigen::Index i = 0; i < p.lambda0.rows(); ++i) p.lambda0(i, i) = lambda0_diag;
    p.lambda = lambda;
    p.noise_scale = noise_scale;
    p.horizon = horizon;
    p.jitter_width = jitter_width;

    if (!planted_explicit.empty()) {
        p.planted = planted_explicit;
        p.validate();
        return p;
    }

    // Materialize planted member sets from the recipe: round-robin over
    // communities, members drawn without replacement from each community's
    // eligible pool. Distinct sets enforced by rejection.
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 3);
    std::vector<std::vector<NodeId>> pools(communities);
    for (std::size_t i = 0; i < n; ++i) {
        auto c = static_cast<std::size_t>(p.community_of[i]);
        if (planted_pool == 0 || pools[c].size() < planted_pool)
            pools[c].push_back(static_cast<NodeId>(i));
    }
    std::set<std::vector<NodeId>> seen;
    for (std::size_t k = 0; k < planted_count; ++k) {
        std::size_t c = k % communities;
        if (pools[c].size() < planted_size)
            throw std::invalid_argument("htsbm: planted pool smaller than planted size");
        std::vector<NodeId> members;
        for (std::size_t attempt = 0; attempt < 1000; ++attempt) {
            std::vector<NodeId> pool = pools[c];
            members.clear();
            for (std::size_t j = 0; j < planted_size; ++j) {
                std::size_t idx = static_cast<std::size_t>(rng() % pool.size());
                members.push_back(pool[idx]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
            }
            std::sort(members.begin(), members.end());
            if (seen.insert(members).second) break;
            members.clear();
        }
        if (members.empty())
            throw std::invalid_argument("htsbm: could not draw distinct planted hyperedges");
        p.planted.push_back({members, std::nullopt});
    }
    p.validate();
    return p;
}

namespace {

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_kind(const json& j, const char* key, GraphKind& out) {
    if (!j.contains(key)) return;
    std::string s = j.at(key).get<std::string>();
    if (s == "homogeneous") out = GraphKind::homogeneous;
    else if (s == "bipartite") out = GraphKind::bipartite;
    else throw std::invalid_argument("config: kind must be homogeneous or bipartite");
}

void parse_data(const json& j, DataConfig& d) {
    reject_unknown(j, "data", {"path", "kind", "d_e", "side_b", "sidecar_path", "htsbm"});
    if (j.contains("path")) d.path = j.at("path").get<std::string>();
    read_kind(j, "kind", d.kind);
    read(j, "d_e", d.d_e);
    if (j.contains("side_b")) {
        std::string s = j.at("side_b").get<std::string>();
        if (s == "dst") d.side_b = SideBRule::dst_only;
        else if (s == "sidecar") d.side_b = SideBRule::sidecar;
        else throw std::invalid_argument("config: data.side_b must be dst or sidecar");
    }
    if (j.contains("sidecar_path")) d.sidecar_path = j.at("sidecar_path").get<std::string>();
    if (j.contains("htsbm")) {
        const json& h = j.at("htsbm");
        reject_unknown(h, "data.htsbm",
                       {"n", "communities", "lambda", "noise_scale", "horizon", "jitter_width",
                        "lambda0_diag", "lambda0_offdiag", "planted_count", "planted_size",
                        "planted_pool", "planted_explicit", "seed"});
        HtsbmConfig hc;
        read(h, "n", hc.n);
        read(h, "communities", hc.communities);
        read(h, "lambda", hc.lambda);
        read(h, "noise_scale", hc.noise_scale);
        read(h, "horizon", hc.horizon);
        read(h, "jitter_width", hc.jitter_width);
        read(h, "lambda0_diag", hc.lambda0_diag);
        read(h, "lambda0_offdiag", hc.lambda0_offdiag);
        read(h, "planted_count", hc.planted_count);
        read(h, "planted_size", hc.planted_size);
        read(h, "planted_pool", hc.planted_pool);
        read(h, "seed", hc.seed);
        if (h.contains("planted_explicit")) {
            for (const auto& e : h.at("planted_explicit")) {
                reject_unknown(e, "data.htsbm.planted_explicit[]", {"members", "time"});
                PlantedHyperedge ph;
                ph.members = e.at("members").get<std::vector<NodeId>>();
                if (e.contains("time")) ph.activation = e.at("time").get<double>();
                hc.planted_explicit.push_back(std::move(ph));
            }
        }
        d.htsbm = std::move(hc);
    }
}

void parse_builder(const json& j, BuilderConfig& b) {
    reject_unknown(j, "builder", {"b", "window", "capacity", "t_prime", "mode"});
    read(j, "b", b.snapshot_edges);
    if (j.contains("window") && !j.at("window").is_null())
        b.snapshot_span = j.at("window").get<double>();
    read(j, "capacity", b.capacity);
    if (j.contains("t_prime") && !j.at("t_prime").is_null())
        b.t_prime = j.at("t_prime").get<double>();
    if (j.contains("mode")) {
        std::string s = j.at("mode").get<std::string>();
        if (s == "hyper") b.pairwise_ablation = false;
        else if (s == "pairwise") b.pairwise_ablation = true;
        else throw std::invalid_argument("config: builder.mode must be hyper or pairwise");
    }
}

void parse_model(const json& j, ModelConfig& m, std::uint64_t& seed) {
    reject_unknown(j, "model",
                   {"d_m", "d_t", "d_emb", "hidden", "layers", "neighbor_cap", "alpha", "beta",
                    "seed"});
    read(j, "d_m", m.d_m);
    read(j, "d_t", m.d_t);
    read(j, "d_emb", m.d_emb);
    read(j, "hidden", m.hidden);
    read(j, "layers", m.layers);
    read(j, "neighbor_cap", m.neighbor_cap);
    read(j, "alpha", m.alpha);
    read(j, "beta", m.beta);
    read(j, "seed", seed);
}

void parse_train(const json& j, TrainConfig& t, bool& wall_timing) {
    reject_unknown(j, "train",
                   {"batch_size", "lr", "epochs", "seed", "train_negatives", "eval_negatives",
                    "neg_mix", "patience", "timing"});
    read(j, "batch_size", t.batch_size);
    read(j, "lr", t.lr);
    read(j, "epochs", t.epochs);
    read(j, "seed", t.seed);
    read(j, "train_negatives", t.train_negatives);
    read(j, "eval_negatives", t.eval_negatives);
    read(j, "neg_mix", t.neg_mix);
    read(j, "patience", t.patience);
    if (j.contains("timing")) {
        std::string s = j.at("timing").get<std::string>();
        if (s == "off") wall_timing = false;
        else if (s == "wall") wall_timing = true;
        else throw std::invalid_argument("config: train.timing must be off or wall");
    }
}

json to_json(const RunConfig& cfg) {
    json j;
    json d;
    if (cfg.data.path) d["path"] = *cfg.data.path;
    d["kind"] = cfg.data.kind == GraphKind::bipartite ? "bipartite" : "homogeneous";
    d["d_e"] = cfg.data.d_e;
    d["side_b"] = cfg.data.side_b == SideBRule::sidecar ? "sidecar" : "dst";
    if (cfg.data.sidecar_path) d["sidecar_path"] = *cfg.data.sidecar_path;
    if (cfg.data.htsbm) {
        const HtsbmConfig& h = *cfg.data.htsbm;
        json hj;
        hj["n"] = h.n;
        hj["communities"] = h.communities;
        hj["lambda"] = h.lambda;
        hj["noise_scale"] = h.noise_scale;
        hj["horizon"] = h.horizon;
        hj["jitter_width"] = h.jitter_width;
        hj["lambda0_diag"] = h.lambda0_diag;
        hj["lambda0_offdiag"] = h.lambda0_offdiag;
        hj["planted_count"] = h.planted_count;
        hj["planted_size"] = h.planted_size;
        hj["planted_pool"] = h.planted_pool;
        hj["seed"] = h.seed;
        if (!h.planted_explicit.empty()) {
            json arr = json::array();
            for (const auto& p : h.planted_explicit) {
                json e;
                e["members"] = p.members;
                if (p.activation) e["time"] = *p.activation;
                arr.push_back(std::move(e));
            }
            hj["planted_explicit"] = std::move(arr);
        }
        d["htsbm"] = std::move(hj);
    }
    j["data"] = std::move(d);

    json b;
    b["b"] = cfg.builder.snapshot_edges;
    if (cfg.builder.snapshot_span) b["window"] = *cfg.builder.snapshot_span;
    else b["window"] = nullptr;
    b["capacity"] = cfg.builder.capacity;
    if (cfg.builder.t_prime) b["t_prime"] = *cfg.builder.t_prime;
    else b["t_prime"] = nullptr;
    b["mode"] = cfg.builder.pairwise_ablation ? "pairwise" : "hyper";
    j["builder"] = std::move(b);

    json m;
    m["d_m"] = cfg.model.d_m;
    m["d_t"] = cfg.model.d_t;
    m["d_emb"] = cfg.model.d_emb;
    m["hidden"] = cfg.model.hidden;
    m["layers"] = cfg.model.layers;
    m["neighbor_cap"] = cfg.model.neighbor_cap;
    m["alpha"] = cfg.model.alpha;
    m["beta"] = cfg.model.beta;
    m["seed"] = cfg.model_seed;
    j["model"] = std::move(m);

    json t;
    t["batch_size"] = cfg.train.batch_size;
    t["lr"] = cfg.train.lr;
    t["epochs"] = cfg.train.epochs;
    t["seed"] = cfg.train.seed;
    t["train_negatives"] = cfg.train.train_negatives;
    t["eval_negatives"] = cfg.train.eval_negatives;
    t["neg_mix"] = cfg.train.neg_mix;
    t["patience"] = cfg.train.patience;
    t["timing"] = cfg.wall_timing ? "wall" : "off";
    j["train"] = std::move(t);

    j["output"] = {{"directory", cfg.output_dir}};

    if (cfg.sweep) {
        json s;
        s["durations"] = cfg.sweep->durations;
        s["seeds"] = cfg.sweep->seeds;
        s["seed"] = cfg.sweep->seed;
        j["sweep"] = std::move(s);
    }
    return j;
}

RunConfig from_json(const json& j) {
    reject_unknown(j, "<root>", {"data", "builder", "model", "train", "output", "sweep"});
    RunConfig cfg;
    if (j.contains("data")) parse_data(j.at("data"), cfg.data);
    if (j.contains("builder")) parse_builder(j.at("builder"), cfg.builder);
    if (j.contains("model")) parse_model(j.at("model"), cfg.model, cfg.model_seed);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train, cfg.wall_timing);
    if (j.contains("output")) {
        reject_unknown(j.at("output"), "output", {"directory"});
        read(j.at("output"), "directory", cfg.output_dir);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        reject_unknown(s, "sweep", {"durations", "seeds", "seed"});
        SweepConfig sc;
        if (s.contains("durations")) sc.durations = s.at("durations").get<std::vector<double>>();
        read(s, "seeds", sc.seeds);
        read(s, "seed", sc.seed);
        cfg.sweep = std::move(sc);
    }
    cfg.model.d_e = cfg.data.d_e;
    return cfg;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
    json j = json::parse(text);
    return from_json(j);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& key_eq_value) {
    auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like section.key=value");
    std::string key = key_eq_value.substr(0, eq);
    std::string value = key_eq_value.substr(eq + 1);

    json j = json::parse(run_config_echo(cfg));
    json* at = &j;
    std::size_t start = 0;
    while (true) {
        auto dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;  // bare strings
            }
            (*at)[part] = parsed;
            break;
        }
        at = &((*at)[part]);
        start = dot + 1;
    }
    cfg = from_json(j);
}

std::string run_config_echo(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string run_id(const RunConfig& cfg) {
    std::string s = run_config_echo(cfg);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace htgn
