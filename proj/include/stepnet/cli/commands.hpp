#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stepnet::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 2,
    script_mismatch = 3,
    runtime_error = 4,
};

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> steps;
    std::string out = ".";
};

struct TrainArgs : CommonArgs {
    /// Resume from this checkpoint when set.
    std::string checkpoint;
};

struct EvalArgs : CommonArgs {
    std::string checkpoint;
};

struct BenchArgs : CommonArgs {
    std::vector<std::size_t> worker_counts;
};

struct ReplayArgs : CommonArgs {
    std::string script;
};

/// Writes checkpoint.json, train_log.csv and episodes.csv under `out`.
int cmd_train(const TrainArgs& args, std::ostream& err);

/// Writes eval.csv under `out`.
int cmd_eval(const EvalArgs& args, std::ostream& err);

/// Writes bench.csv under `out`.
int cmd_bench(const BenchArgs& args, std::ostream& err);

/// Writes trace.csv under `out`.
int cmd_replay(const ReplayArgs& args, std::ostream& err);

/// Level from STEPNET_LOG (trace, debug, info, warn, error, off); default warn.
void configure_logging();

} // namespace stepnet::cli
