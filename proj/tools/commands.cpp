#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "htgn/format.hpp"
#include "htgn/hyperedge_builder.hpp"

namespace htgn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

TemporalGraph load_dataset(const RunConfig& cfg, const std::string& out_dir,
                           bool persist_generated) {
    if (cfg.data.path) {
        LoadOptions opts;
        opts.kind = cfg.data.kind;
        opts.edge_feat_dim = cfg.data.d_e;
        opts.side_b_rule = cfg.data.side_b;
        opts.sidecar_path = cfg.data.sidecar_path;
        return load_events(*cfg.data.path, opts);
    }
    if (cfg.data.htsbm) {
        HtsbmParams params = cfg.data.htsbm->materialize();
        HtsbmSample sample = sample_htsbm(params, cfg.data.htsbm->seed);
        if (persist_generated)
            save_events(sample.graph, (fs::path(out_dir) / "events.csv").string());
        return std::move(sample.graph);
    }
    throw std::runtime_error("config needs either data.path or data.htsbm");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string metrics_csv(const std::vector<EpochRow>& rows, bool wall_timing) {
    std::ostringstream out;
    out << "epoch,split,loss,mrr,peak_slots,ratio,seconds\n";
    for (const EpochRow& r : rows) {
        std::string secs = wall_timing ? format_double(r.seconds) : "0";
        out << r.epoch << ",train," << (r.train_loss ? format_double(*r.train_loss) : "") << ",,"
            << r.peak_slots << "," << format_double(r.ratio) << "," << secs << "\n";
        out << r.epoch << ",val,," << format_double(r.val_mrr) << "," << r.peak_slots << ","
            << format_double(r.ratio) << ",0\n";
    }
    return out.str();
}

EvalResult stub_eval_mrr(const TemporalGraph& g, EventRange range, const TrainConfig& tcfg,
                         bool oracle) {
    // Scores are 1 for what the scorer believes in and 0 otherwise; the rank
    // rule (ties count against the positive) matches the model path.
    std::mt19937_64 rng(tcfg.seed * 0x9E3779B97F4A7C15ull + 101);
    EvalResult r;
    double rr = 0.0;
    for (std::size_t i = range.first; i < range.second; ++i) {
        const Event& e = g.events()[i];
        if (e.src == e.dst) continue;
        NegativeSamples negs = sample_negatives_detailed(g, e.src, e.time, tcfg.eval_negatives,
                                                         tcfg.neg_mix, e.dst, rng);
        std::size_t n = negs.random.size() + negs.historical.size();
        std::size_t over = oracle ? 0 : n;
        rr += 1.0 / static_cast<double>(1 + over);
        ++r.n_queries;
    }
    if (r.n_queries == 0) throw std::runtime_error("eval: no scorable events");
    r.mrr = rr / static_cast<double>(r.n_queries);
    r.mrr_random = r.mrr;
    r.mrr_historical = r.mrr;
    return r;
}

}  // namespace

std::string prepare_output_dir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    if (const char* root = std::getenv("HTGN_OUTPUT_ROOT"); root && dir.is_relative())
        dir = fs::path(root) / dir;
    fs::create_directories(dir);
    write_text((dir / "config.json").string(), run_config_echo(cfg));
    return dir.string();
}

int cmd_generate(const RunConfig& cfg) {
    if (!cfg.data.htsbm) throw std::runtime_error("generate: config needs a data.htsbm section");
    std::string out = prepare_output_dir(cfg);

    HtsbmParams params = cfg.data.htsbm->materialize();
    HtsbmSample sample = sample_htsbm(params, cfg.data.htsbm->seed);
    save_events(sample.graph, (fs::path(out) / "events.csv").string());
    write_id_map(sample.graph, (fs::path(out) / "id_map.json").string());

    std::ofstream planted((fs::path(out) / "planted.jsonl").string());
    for (std::size_t i = 0; i < params.planted.size(); ++i) {
        json j;
        std::vector<NodeId> members = params.planted[i].members;
        std::sort(members.begin(), members.end());
        j["members"] = members;
        j["time"] = sample.planted_times[i];
        planted << j.dump() << "\n";
    }

    std::cout << "generate: " << sample.graph.events().size() << " events ("
              << sample.burst_events << " burst, " << sample.background_events
              << " background), " << params.planted.size() << " planted hyperedges -> " << out
              << "\n";
    return 0;
}

int cmd_build(const RunConfig& cfg) {
    std::string out = prepare_output_dir(cfg);
    TemporalGraph g = load_dataset(cfg, out, /*persist_generated=*/true);
    write_id_map(g, (fs::path(out) / "id_map.json").string());

    std::ofstream merge_log((fs::path(out) / "merges.jsonl").string());
    SnapshotPolicy policy{cfg.builder.snapshot_edges, cfg.builder.snapshot_span};

    if (g.kind() == GraphKind::bipartite) {
        HyperedgeRegistry reg = HyperedgeRegistry::bipartite(g.num_nodes(), g.side_b_nodes());
        double t_prime = cfg.builder.t_prime.value_or(1.0);
        std::size_t since_prune = 0;
        for (const Event& e : g.events()) {
            ingest_link_bipartite(reg, e.src, e.dst, e.time, cfg.builder.capacity, t_prime);
            if (++since_prune >= cfg.builder.snapshot_edges) {
                prune_stale_memberships(reg, e.time, t_prime);
                since_prune = 0;
            }
        }
        if (!g.events().empty())
            prune_stale_memberships(reg, g.events().back().time, t_prime);
        std::ofstream dump((fs::path(out) / "hyperedges.jsonl").string());
        reg.dump_jsonl(dump);
        FootprintReport fp = memory_footprint_report(reg, g);
        write_text((fs::path(out) / "footprint.csv").string(),
                   "peak_slots,num_nodes,ratio\n" + std::to_string(fp.peak_slots) + "," +
                       std::to_string(fp.num_nodes) + "," + format_double(fp.ratio) + "\n");
        std::cout << "build: " << reg.live_count() << " hyperedges, peak slots " << fp.peak_slots
                  << " -> " << out << "\n";
        return 0;
    }

    HyperedgeRegistry reg(g.num_nodes());
    Snapshot snap;
    std::size_t merge_count = 0;
    for (const Event& e : g.events()) {
        if (e.src == e.dst) continue;
        if (cfg.builder.pairwise_ablation) {
            ingest_link_pairwise(reg, e.src, e.dst, e.time);
            continue;
        }
        IngestResult res = ingest_link_homogeneous(reg, snap, e.src, e.dst, e.time, policy);
        auto merges = res.all_merges();
        merge_count += merges.size();
        append_merge_log(merge_log, merges);
    }
    if (!snap.empty()) {
        auto merges = flush_snapshot(reg, snap, snap.last_time());
        merge_count += merges.size();
        append_merge_log(merge_log, merges);
    }

    std::ofstream dump((fs::path(out) / "hyperedges.jsonl").string());
    reg.dump_jsonl(dump);
    FootprintReport fp = memory_footprint_report(reg, g);
    write_text((fs::path(out) / "footprint.csv").string(),
               "peak_slots,num_nodes,ratio\n" + std::to_string(fp.peak_slots) + "," +
                   std::to_string(fp.num_nodes) + "," + format_double(fp.ratio) + "\n");
    std::cout << "build: " << reg.live_count() << " hyperedges, " << merge_count
              << " merges, peak slots " << fp.peak_slots << " -> " << out << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    if (!cfg.data.htsbm) throw std::runtime_error("sweep: config needs a data.htsbm section");
    if (!cfg.sweep || cfg.sweep->durations.empty())
        throw std::runtime_error("sweep: config needs a sweep section with durations");
    std::string out = prepare_output_dir(cfg);

    HtsbmParams params = cfg.data.htsbm->materialize();
    SweepResult result =
        duration_sweep(params, cfg.sweep->durations, cfg.sweep->seeds, cfg.sweep->seed);

    std::ostringstream cells;
    cells << "duration,seed,precision,recall,jaccard\n";
    for (const SweepCell& c : result.cells)
        cells << format_double(c.duration) << "," << c.seed << ","
              << format_double(c.report.precision) << "," << format_double(c.report.recall)
              << "," << format_double(c.report.jaccard) << "\n";
    write_text((fs::path(out) / "sweep.csv").string(), cells.str());

    std::ostringstream summary;
    summary << "duration,mean_precision,mean_recall,mean_jaccard,std_jaccard\n";
    for (const SweepSummary& s : result.summary)
        summary << format_double(s.duration) << "," << format_double(s.mean_precision) << ","
                << format_double(s.mean_recall) << "," << format_double(s.mean_jaccard) << ","
                << format_double(s.std_jaccard) << "\n";
    write_text((fs::path(out) / "sweep_summary.csv").string(), summary.str());

    json rep;
    rep["spearman"] = result.spearman;
    rep["trend_pass"] = result.spearman <= -0.8;
    rep["durations"] = cfg.sweep->durations;
    rep["seeds"] = cfg.sweep->seeds;
    rep["run_id"] = run_id(cfg);
    write_text((fs::path(out) / "sweep_report.json").string(), rep.dump(2) + "\n");

    std::cout << "sweep: spearman(duration, mean jaccard) = " << result.spearman << " -> " << out
              << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    std::string out = prepare_output_dir(cfg);
    TemporalGraph g = load_dataset(cfg, out, /*persist_generated=*/true);
    write_id_map(g, (fs::path(out) / "id_map.json").string());

    ModelConfig mcfg = cfg.model;
    mcfg.d_e = g.edge_feat_dim();
    TrainContext ctx(g, mcfg, cfg.builder, cfg.train, cfg.model_seed);

    auto [i1, i2] = split_indices(g.events().size(), SplitSpec{});
    EventRange train_range{0, i1}, val_range{i1, i2}, test_range{i2, g.events().size()};

    FitResult result;
    if (cfg.train.epochs == 0) {
        std::cout << "train: epochs=0, writing the initial checkpoint only\n";
    } else {
        result = fit(ctx, train_range, val_range, [&](const EpochRow& row) {
            std::cerr << "epoch " << row.epoch << ": loss="
                      << (row.train_loss ? format_double(*row.train_loss) : "n/a")
                      << " val_mrr=" << format_double(row.val_mrr) << " peak_slots="
                      << row.peak_slots << " (" << format_double(row.seconds) << "s)\n";
            return true;
        });
    }
    write_text((fs::path(out) / "metrics.csv").string(),
               metrics_csv(result.rows, cfg.wall_timing));

    save_checkpoint((fs::path(out) / "checkpoint.json").string(), ctx.model().params());
    {
        std::ofstream dump((fs::path(out) / "registry.jsonl").string());
        ctx.registry().dump_jsonl(dump);
    }
    ctx.bank().dump_json((fs::path(out) / "bank.json").string());

    json meta;
    meta["alpha"] = mcfg.alpha;
    meta["beta"] = mcfg.beta;
    meta["layers"] = mcfg.layers;
    meta["widths"] = {{"d_e", mcfg.d_e}, {"d_m", mcfg.d_m},   {"d_t", mcfg.d_t},
                      {"d_emb", mcfg.d_emb}, {"hidden", mcfg.hidden}};
    meta["neighbor_cap"] = mcfg.neighbor_cap;
    meta["kind"] = g.kind() == GraphKind::bipartite ? "bipartite" : "homogeneous";
    meta["registry_dump"] = "registry.jsonl";
    meta["memory_bank"] = "bank.json";
    meta["run_id"] = run_id(cfg);
    write_text((fs::path(out) / "model_meta.json").string(), meta.dump(2) + "\n");

    // Final test pass with the best-validation weights.
    json summary;
    summary["run_id"] = run_id(cfg);
    summary["epochs_run"] = result.epochs_run;
    summary["best_epoch"] = result.best_epoch;
    summary["best_val_mrr"] = result.best_val_mrr;
    if (cfg.train.epochs > 0 && test_range.first < test_range.second) {
        ctx.reset_state();
        ctx.roll_forward({0, test_range.first});
        EvalResult test = ctx.evaluate_mrr(test_range);
        summary["test_mrr"] = test.mrr;
        summary["test_mrr_random"] = test.mrr_random;
        summary["test_mrr_historical"] = test.mrr_historical;
        summary["test_queries"] = test.n_queries;
    }
    write_text((fs::path(out) / "train_summary.json").string(), summary.dump(2) + "\n");

    std::cout << "train: best val MRR " << format_double(result.best_val_mrr) << " at epoch "
              << result.best_epoch << " -> " << out << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const EvalOptions& opts) {
    std::string out = prepare_output_dir(cfg);
    TemporalGraph g = load_dataset(cfg, out, /*persist_generated=*/false);

    auto [i1, i2] = split_indices(g.events().size(), SplitSpec{});
    EventRange range = opts.split == "val" ? EventRange{i1, i2}
                                           : EventRange{i2, g.events().size()};
    if (opts.split != "val" && opts.split != "test")
        throw std::runtime_error("eval: split must be val or test");

    EvalResult result;
    if (opts.scorer == "oracle" || opts.scorer == "anti") {
        result = stub_eval_mrr(g, range, cfg.train, opts.scorer == "oracle");
    } else if (opts.scorer == "model") {
        if (opts.checkpoint.empty())
            throw std::runtime_error("eval: --checkpoint is required for the model scorer");
        if (!fs::exists(opts.checkpoint))
            throw std::runtime_error("eval: checkpoint not found: " + opts.checkpoint);
        ModelConfig mcfg = cfg.model;
        mcfg.d_e = g.edge_feat_dim();
        TrainContext ctx(g, mcfg, cfg.builder, cfg.train, cfg.model_seed);
        load_checkpoint(opts.checkpoint, ctx.model().params());
        ctx.reset_state();
        ctx.roll_forward({0, range.first});
        result = ctx.evaluate_mrr(range);
    } else {
        throw std::runtime_error("eval: scorer must be model, oracle, or anti");
    }

    json j;
    j["mrr"] = result.mrr;
    j["mrr_random"] = result.mrr_random;
    j["mrr_historical"] = result.mrr_historical;
    j["n_queries"] = result.n_queries;
    j["n_queries_historical"] = result.n_queries_historical;
    j["split"] = opts.split;
    j["scorer"] = opts.scorer;
    j["eval_negatives"] = cfg.train.eval_negatives;
    j["run_id"] = run_id(cfg);
    write_text((fs::path(out) / ("eval_" + opts.split + ".json")).string(), j.dump(2) + "\n");

    std::cout << "eval: " << opts.split << " MRR " << format_double(result.mrr) << " over "
              << result.n_queries << " queries -> " << out << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    fs::path dir(run_dir);
    if (!fs::exists(dir / "config.json"))
        throw std::runtime_error("report: no config.json under " + run_dir);
    json rep;
    {
        std::ifstream in(dir / "config.json");
        rep["config"] = json::parse(in);
    }
    for (const char* name : {"train_summary.json", "sweep_report.json", "eval_val.json",
                             "eval_test.json"}) {
        if (fs::exists(dir / name)) {
            std::ifstream in(dir / name);
            std::string key(name);
            rep[key.substr(0, key.size() - 5)] = json::parse(in);
        }
    }
    if (fs::exists(dir / "metrics.csv")) {
        std::ifstream in(dir / "metrics.csv");
        std::string line;
        std::size_t rows = 0;
        while (std::getline(in, line)) ++rows;
        rep["metrics_rows"] = rows > 0 ? rows - 1 : 0;
    }
    write_text((dir / "report.json").string(), rep.dump(2) + "\n");
    std::cout << "report -> " << (dir / "report.json").string() << "\n";
    return 0;
}

}  // namespace htgn::cli
