#include "stepnet/cli/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace stepnet::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "configuration file (JSON)");
    cmd->add_option("--seed", args.seed, "root seed");
    cmd->add_option("--steps", args.steps, "step budget");
    cmd->add_option("--out", args.out, "output directory")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"stepnet: packet-level network simulation with a stepped RL interface"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a DQN policy; writes checkpoint.json, train_log.csv, episodes.csv");
    add_common(train_cmd, train);
    train_cmd->add_option("--workers", train.workers, "rollout workers");
    train_cmd->add_option("--checkpoint", train.checkpoint, "resume from this checkpoint");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation, optionally over a parameter sweep; writes eval.csv");
    add_common(eval_cmd, eval);
    eval_cmd->add_option("--workers", eval.workers, "ignored; evaluation is sequential");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "policy checkpoint");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "collection throughput per worker count; writes bench.csv");
    add_common(bench_cmd, bench);
    bench_cmd->add_option("--workers", bench.worker_counts, "worker counts, e.g. 1,2,4")->delimiter(',');

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "run a scripted episode; writes trace.csv");
    add_common(replay_cmd, replay);
    replay_cmd->add_option("--workers", replay.workers, "ignored; replay is single-threaded");
    replay_cmd->add_option("--script", replay.script, "JSON array of {agent: action} objects");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    if (*train_cmd) {
        return cmd_train(train, std::cerr);
    }
    if (*eval_cmd) {
        return cmd_eval(eval, std::cerr);
    }
    if (*bench_cmd) {
        return cmd_bench(bench, std::cerr);
    }
    return cmd_replay(replay, std::cerr);
}
