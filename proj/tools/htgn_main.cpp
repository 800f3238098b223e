#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

htgn::RunConfig resolve_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
    htgn::RunConfig cfg =
        config_path.empty() ? htgn::RunConfig{} : htgn::load_run_config(config_path);
    for (const std::string& o : overrides) htgn::apply_override(cfg, o);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HTGN: higher-order structure temporal graph learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "Run configuration file (JSON)");
    app.add_option("--set", overrides, "Override a config key, e.g. --set train.epochs=20");

    auto* generate = app.add_subcommand("generate", "Write an HT-SBM dataset");
    auto* build = app.add_subcommand("build", "Run hyperedge construction over a dataset");
    auto* sweep = app.add_subcommand("sweep", "Snapshot-duration accuracy sweep");
    auto* train = app.add_subcommand("train", "Train the link predictor");
    auto* eval = app.add_subcommand("eval", "Evaluate MRR from a checkpoint");
    auto* report = app.add_subcommand("report", "Summarize a run directory");

    htgn::cli::EvalOptions eval_opts;
    eval->add_option("--checkpoint", eval_opts.checkpoint, "Parameter checkpoint path");
    eval->add_option("--split", eval_opts.split, "val or test")->default_val("test");
    eval->add_option("--scorer", eval_opts.scorer, "model, oracle, or anti")
        ->default_val("model");

    std::string report_dir;
    report->add_option("run_dir", report_dir, "Run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) return htgn::cli::cmd_report(report_dir);

        htgn::RunConfig cfg = resolve_config(config_path, overrides);
        if (generate->parsed()) return htgn::cli::cmd_generate(cfg);
        if (build->parsed()) return htgn::cli::cmd_build(cfg);
        if (sweep->parsed()) return htgn::cli::cmd_sweep(cfg);
        if (train->parsed()) return htgn::cli::cmd_train(cfg);
        if (eval->parsed()) return htgn::cli::cmd_eval(cfg, eval_opts);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
