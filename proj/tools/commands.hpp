#ifndef HTGN_TOOLS_COMMANDS_HPP
#define HTGN_TOOLS_COMMANDS_HPP

#include <string>

#include "htgn/run_config.hpp"

namespace htgn::cli {

/// Resolve the run's output directory (HTGN_OUTPUT_ROOT prefixes relative
/// paths), create it, and write the fully-resolved config echo into it.
std::string prepare_output_dir(const RunConfig& cfg);

int cmd_generate(const RunConfig& cfg);
int cmd_build(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);

struct EvalOptions {
    std::string checkpoint;         // required for the model scorer
    std::string split = "test";     // val | test
    std::string scorer = "model";   // model | oracle | anti
};
int cmd_eval(const RunConfig& cfg, const EvalOptions& opts);

int cmd_report(const std::string& run_dir);

}  // namespace htgn::cli

#endif  // HTGN_TOOLS_COMMANDS_HPP
