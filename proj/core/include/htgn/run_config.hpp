#ifndef HTGN_RUN_CONFIG_HPP
#define HTGN_RUN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htgn/htsbm.hpp"
#include "htgn/model.hpp"
#include "htgn/train_eval.hpp"

namespace htgn {

/// Synthetic-data recipe. Planted member sets are materialized once from
/// `seed`; activation times are drawn per sample seed.
struct HtsbmConfig {
    std::size_t n = 60;
    std::size_t communities = 3;
    double lambda = 1.0;
    double noise_scale = 1.0;
    double horizon = 100.0;
    double jitter_width = 1.0;
    double lambda0_diag = 0.5;
    double lambda0_offdiag = 0.05;
    std::size_t planted_count = 10;
    std::size_t planted_size = 3;
    std::size_t planted_pool = 0;  // nodes per community eligible; 0 = all
    std::vector<PlantedHyperedge> planted_explicit;
    std::uint64_t seed = 7;

    HtsbmParams materialize() const;
};

struct DataConfig {
    std::optional<std::string> path;
    GraphKind kind = GraphKind::homogeneous;
    int d_e = 0;
    SideBRule side_b = SideBRule::dst_only;
    std::optional<std::string> sidecar_path;
    std::optional<HtsbmConfig> htsbm;
};

struct SweepConfig {
    std::vector<double> durations;
    std::size_t seeds = 20;
    std::uint64_t seed = 1;
};

struct RunConfig {
    DataConfig data;
    BuilderConfig builder;
    ModelConfig model;
    std::uint64_t model_seed = 1;
    TrainConfig train;
    bool wall_timing = false;  // metrics CSV stays byte-reproducible when off
    std::string output_dir = "out";
    std::optional<SweepConfig> sweep;
};

/// Parse a config file; unknown keys are rejected, absent keys take the
/// defaults above. Returns the fully-resolved configuration.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);

/// Apply a dotted-path override such as "train.epochs=20" or
/// "data.htsbm.noise_scale=0.5". Values parse as JSON, falling back to string.
void apply_override(RunConfig& cfg, const std::string& key_eq_value);

/// Serialize the fully-resolved config (a valid input for a rerun).
std::string run_config_echo(const RunConfig& cfg);

/// FNV-1a hash of the resolved config, as a 16-hex-digit run id.
std::string run_id(const RunConfig& cfg);

}  // namespace htgn

#endif  // HTGN_RUN_CONFIG_HPP
