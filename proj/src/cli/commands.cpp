#include "stepnet/cli/commands.hpp"

#include "stepnet/errors.hpp"
#include "stepnet/json_checks.hpp"
#include "stepnet/scenarios/registry.hpp"
#include "stepnet/trainer/trainer.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

namespace stepnet::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

fs::path prepare_out(const std::string& out) {
    fs::path dir(out.empty() ? "." : out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    return dir;
}

// File outputs named in a config land under --out, keeping only their file name.
void redirect_outputs(json& config, const fs::path& out, const std::string& suffix = "") {
    auto place = [&](json& slot) {
        fs::path name = fs::path(slot.get<std::string>()).filename();
        if (!suffix.empty()) {
            name = name.stem().string() + suffix + name.extension().string();
        }
        slot = (out / name).string();
    };
    if (config.contains("event_trace") && config["event_trace"].is_string()) {
        place(config["event_trace"]);
    }
    if (config.contains("dumbbell") && config["dumbbell"].is_object() && config["dumbbell"].contains("timeseries")) {
        auto& ts = config["dumbbell"]["timeseries"];
        if (ts.is_object() && ts.contains("path") && ts["path"].is_string()) {
            place(ts["path"]);
        }
    }
}

json load(const CommonArgs& args) {
    if (args.config.empty()) {
        throw ConfigError({"--config: a configuration file is required"});
    }
    json config = scenarios::load_config(args.config);
    if (args.seed) {
        config["seed"] = *args.seed;
    }
    return config;
}

trainer::TrainerConfig trainer_config(const json& config, const CommonArgs& args) {
    trainer::TrainerConfig tc = trainer::TrainerConfig::from_json(config.value("trainer", json::object()));
    if (args.seed) {
        tc.seed = *args.seed;
    } else if (config.contains("seed") && !config.contains("trainer")) {
        tc.seed = config["seed"].get<std::uint64_t>();
    }
    if (args.workers) {
        tc.workers = *args.workers;
    }
    if (args.steps) {
        tc.total_steps = *args.steps;
    }
    tc.validate();
    return tc;
}

int report(std::ostream& err, const char* command, const std::exception& e, int code) {
    err << "stepnet " << command << ": " << e.what() << '\n';
    return code;
}

class ScriptMismatch : public Error {
    using Error::Error;
};

template <class F>
int guarded(const char* command, std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        return report(err, command, e, config_error);
    } catch (const ScriptMismatch& e) {
        return report(err, command, e, script_mismatch);
    } catch (const std::exception& e) {
        return report(err, command, e, runtime_error);
    }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
    std::string dimension;
    std::vector<double> values;
    double bandwidth_mbps = 96.0;
    double rtt_ms = 40.0;
    double buffer_pkts = 440.0;
    std::size_t episodes = 10;
};

const std::map<std::string, std::vector<double>>& default_grids() {
    static const std::map<std::string, std::vector<double>> grids{
        {"bandwidth", {32, 64, 96, 128, 160, 192, 224, 256}},
        {"rtt", {8, 16, 24, 32, 40, 48, 56, 64, 80, 96}},
        {"buffer", {40, 80, 160, 320, 440, 640, 800, 1000}},
    };
    return grids;
}

SweepSpec parse_sweep(const json& section) {
    SweepSpec s;
    std::vector<std::string> problems;
    for (const auto& [key, value] : section.items()) {
        if (key != "dimension" && key != "values" && key != "fixed" && key != "episodes" && key != "checkpoint") {
            problems.push_back("eval." + key + ": unknown key");
        }
    }
    if (section.contains("episodes")) {
        const auto& e = section["episodes"];
        if (!non_negative_integer(e) || e.get<std::size_t>() == 0) {
            problems.push_back("eval.episodes: must be a positive integer");
        } else {
            s.episodes = e.get<std::size_t>();
        }
    }
    if (section.contains("fixed")) {
        for (const auto& [key, value] : section["fixed"].items()) {
            if (!value.is_number() || value.get<double>() <= 0) {
                problems.push_back("eval.fixed." + key + ": must be a positive number");
                continue;
            }
            if (key == "bandwidth") {
                s.bandwidth_mbps = value.get<double>();
            } else if (key == "rtt") {
                s.rtt_ms = value.get<double>();
            } else if (key == "buffer") {
                s.buffer_pkts = value.get<double>();
            } else {
                problems.push_back("eval.fixed." + key + ": expected bandwidth, rtt or buffer");
            }
        }
    }
    if (section.contains("dimension")) {
        s.dimension = section["dimension"].is_string() ? section["dimension"].get<std::string>() : "";
        if (!default_grids().contains(s.dimension)) {
            problems.push_back("eval.dimension: expected bandwidth, rtt or buffer");
        } else if (section.contains("values")) {
            const auto& v = section["values"];
            if (!v.is_array() || v.empty()) {
                problems.push_back("eval.values: grid must be a non-empty array");
            } else {
                for (const auto& x : v) {
                    if (!x.is_number() || x.get<double>() <= 0) {
                        problems.push_back("eval.values: entries must be positive numbers");
                        break;
                    }
                    s.values.push_back(x.get<double>());
                }
                if (!std::is_sorted(s.values.begin(), s.values.end())) {
                    problems.push_back("eval.values: grid must be sorted");
                }
            }
        } else {
            s.values = default_grids().at(s.dimension);
        }
    } else if (section.contains("values")) {
        problems.push_back("eval.values: given without eval.dimension");
    }
    if (!problems.empty()) {
        throw ConfigError(problems);
    }
    return s;
}

json at_grid_point(json config, const SweepSpec& s, double value) {
    auto& net = config["dumbbell"];
    if (!net.is_object()) {
        net = json::object();
    }
    net.erase("ranges");
    net["bandwidth_mbps"] = s.dimension == "bandwidth" ? value : s.bandwidth_mbps;
    net["rtt_ms"] = s.dimension == "rtt" ? value : s.rtt_ms;
    net["buffer_pkts"] = std::llround(s.dimension == "buffer" ? value : s.buffer_pkts);
    return config;
}

double metric(const std::map<std::string, double>& m, const char* key) {
    const auto it = m.find(key);
    return it == m.end() ? nan : it->second;
}

// ---------------------------------------------------------------------------
// Replay

env::ActionValue scripted_action(const env::ActionSpace& space, const json& value, const std::string& where) {
    if (std::holds_alternative<env::DiscreteSpace>(space)) {
        if (!non_negative_integer(value)) {
            throw ConfigError({where + ": discrete action must be a non-negative integer"});
        }
        return env::discrete(value.get<std::uint64_t>());
    }
    if (value.is_number()) {
        return env::continuous(value.get<double>());
    }
    if (value.is_array()) {
        std::vector<double> v;
        for (const auto& x : value) {
            if (!x.is_number()) {
                throw ConfigError({where + ": continuous action entries must be numbers"});
            }
            v.push_back(x.get<double>());
        }
        return env::continuous(std::move(v));
    }
    throw ConfigError({where + ": expected a number or an array of numbers"});
}

} // namespace

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("stepnet");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("STEPNET_LOG"); level != nullptr && *level != '\0') {
        spdlog::set_level(spdlog::level::from_str(level));
    }
}

// ---------------------------------------------------------------------------

int cmd_train(const TrainArgs& args, std::ostream& err) {
    return guarded("train", err, [&] {
        json config = load(args);
        const auto tc = trainer_config(config, args);
        const fs::path out = prepare_out(args.out);
        redirect_outputs(config, out);

        trainer::Trainer t(config, tc);
        if (!args.checkpoint.empty()) {
            t.resume(trainer::load_checkpoint(args.checkpoint, t.spaces()));
        }
        auto log = open_output(out / "train_log.csv");
        const auto result = t.run(&log);
        trainer::save_checkpoint((out / "checkpoint.json").string(), t.checkpoint());

        std::set<std::string> keys;
        for (const auto& e : result.episode_log) {
            for (const auto& [k, v] : e.summary.metrics) {
                if (k != "ep_len" && k != "ep_reward") {
                    keys.insert(k);
                }
            }
        }
        auto episodes = open_output(out / "episodes.csv");
        episodes << "# stepnet episodes v1\nstep,worker,seed,ep_reward,ep_len";
        for (const auto& k : keys) {
            episodes << ',' << k;
        }
        episodes << '\n';
        for (const auto& e : result.episode_log) {
            episodes << e.step << ',' << e.summary.worker << ',' << e.summary.seed << ',' << num(e.summary.reward)
                     << ',' << e.summary.length;
            for (const auto& k : keys) {
                const auto it = e.summary.metrics.find(k);
                episodes << ',' << num(it == e.summary.metrics.end() ? nan : it->second);
            }
            episodes << '\n';
        }
        spdlog::info("trained {} steps over {} episodes ({} faults)", result.steps, result.episodes, result.faults);
        return static_cast<int>(ok);
    });
}

int cmd_eval(const EvalArgs& args, std::ostream& err) {
    return guarded("eval", err, [&] {
        json config = load(args);
        const json section = config.value("eval", json::object());
        const SweepSpec sweep = parse_sweep(section);
        std::string path = args.checkpoint;
        if (path.empty() && section.contains("checkpoint")) {
            path = section["checkpoint"].get<std::string>();
        }
        if (path.empty()) {
            throw ConfigError({"--checkpoint: a checkpoint is required (or eval.checkpoint)"});
        }
        if (!sweep.dimension.empty() && config.value("scenario", "") != "dumbbell") {
            throw ConfigError({"eval.dimension: sweeps apply to the dumbbell scenario only"});
        }
        const fs::path out = prepare_out(args.out);

        const auto spaces = scenarios::make_environment(trainer::worker_environment_config(config), 0).spaces();
        const auto checkpoint = trainer::load_checkpoint(path, spaces);
        const auto net = trainer::network_of(checkpoint);
        const trainer::ActionMapper mapper(spaces.action, checkpoint.config.action_bins);

        const std::uint64_t base = args.seed ? *args.seed : config.value("seed", std::uint64_t{1});
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < sweep.episodes; ++i) {
            seeds.push_back(des::derive_seed(base, "eval-" + std::to_string(i)));
        }

        auto csv = open_output(out / "eval.csv");
        csv << "# stepnet eval v1\n"
            << "dimension,value,seed,norm_throughput,mean_queue_delay_ms,loss_rate,ep_reward,ep_len\n";
        auto emit = [&](const std::string& dimension, const std::string& value, const json& point) {
            for (const auto& r : trainer::evaluate(net, mapper, point, seeds)) {
                csv << dimension << ',' << value << ',' << r.seed << ',' << num(metric(r.metrics, "norm_throughput"))
                    << ',' << num(metric(r.metrics, "mean_queue_delay_ms")) << ','
                    << num(metric(r.metrics, "loss_rate")) << ',' << num(r.reward) << ',' << r.length << '\n';
            }
        };
        if (sweep.dimension.empty()) {
            redirect_outputs(config, out);
            emit("none", "", config);
        } else {
            for (std::size_t i = 0; i < sweep.values.size(); ++i) {
                json point = at_grid_point(config, sweep, sweep.values[i]);
                redirect_outputs(point, out, "_" + std::to_string(i));
                emit(sweep.dimension, num(sweep.values[i]), point);
            }
        }
        return static_cast<int>(ok);
    });
}

int cmd_bench(const BenchArgs& args, std::ostream& err) {
    return guarded("bench", err, [&] {
        json config = args.config.empty() ? json{{"scenario", "cartpole"}} : load(args);
        config = trainer::worker_environment_config(config);
        const json section = config.value("bench", json::object());

        std::vector<std::size_t> counts = args.worker_counts;
        if (counts.empty()) {
            counts = section.value("workers", std::vector<std::size_t>{1, 2, 4});
        }
        const std::uint64_t budget = args.steps ? *args.steps : section.value("steps", std::uint64_t{100'000});
        std::vector<std::string> problems;
        if (budget == 0) {
            problems.emplace_back("steps: the step budget must be positive");
        }
        if (counts.empty()) {
            problems.emplace_back("workers: at least one worker count is required");
        }
        for (const auto c : counts) {
            if (c == 0) {
                problems.emplace_back("workers: each count must be at least 1");
                break;
            }
        }
        if (!problems.empty()) {
            throw ConfigError(problems);
        }
        const std::uint64_t base = args.seed ? *args.seed : config.value("seed", std::uint64_t{1});
        const fs::path out = prepare_out(args.out);
        auto csv = open_output(out / "bench.csv");
        csv << "# stepnet bench v1\nworkers,seed,wall_ms,steps_per_sec\n";

        trainer::TrainerConfig tc = trainer::TrainerConfig::from_json(config.value("trainer", json::object()));
        const auto spaces = scenarios::make_environment(config, 0).spaces();
        for (const auto workers : counts) {
            for (std::uint64_t s = 0; s < 3; ++s) {
                tc.seed = base + s;
                trainer::Dqn dqn(trainer::network_layers(spaces, tc), tc);
                trainer::PolicyBoard board;
                board.publish(dqn.online().parameters(), tc.epsilon_start);
                const auto started = std::chrono::steady_clock::now();
                trainer::CollectorPool pool(config, tc, workers, budget, board);
                std::uint64_t collected = 0;
                while (auto item = pool.next()) {
                    collected += item->transition ? 1 : 0;
                }
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
                csv << workers << ',' << tc.seed << ',' << num(ms) << ','
                    << num(static_cast<double>(collected) / (ms / 1000.0)) << '\n';
                spdlog::info("bench workers={} seed={} {:.1f} ms", workers, tc.seed, ms);
            }
        }
        return static_cast<int>(ok);
    });
}

int cmd_replay(const ReplayArgs& args, std::ostream& err) {
    return guarded("replay", err, [&] {
            json config = load(args);
            if (args.script.empty()) {
                throw ConfigError({"--script: an action script is required"});
            }
            const json script = scenarios::load_config(args.script);
            if (!script.is_array()) {
                throw ConfigError({args.script + ": expected a JSON array of {agent: action} objects"});
            }
            const fs::path out = prepare_out(args.out);
            redirect_outputs(config, out);

            env::Environment environment = scenarios::make_environment(config);
            const auto& space = environment.spaces();
            auto csv = open_output(out / "trace.csv");
            csv << "# stepnet trace v1\nstep,agent_id,action,reward";
            for (std::size_t i = 0; i < space.observation_length(); ++i) {
                csv << ",obs_" << i;
            }
            csv << ",done\n";
            std::map<env::AgentId, std::string> last_action;
            auto row = [&](std::uint64_t step, const env::AgentId& id, double reward, const env::Observation& obs,
                           bool done) {
                const auto a = last_action.find(id);
                csv << step << ',' << id << ',' << (a == last_action.end() ? "" : a->second) << ',' << num(reward);
                for (const double v : obs) {
                    csv << ',' << num(v);
                }
                csv << ',' << (done ? 1 : 0) << '\n';
            };

            for (const auto& [id, obs] : environment.reset()) {
                row(0, id, 0.0, obs, false);
            }
            std::size_t used = 0;
            for (; used < script.size() && !environment.episode_done(); ++used) {
                const json& entry = script[used];
                const std::string where = args.script + "[" + std::to_string(used) + "]";
                if (!entry.is_object()) {
                    throw ConfigError({where + ": expected an {agent: action} object"});
                }
                const auto& due = environment.due_agents();
                for (const auto& [key, value] : entry.items()) {
                    if (key != "*" && !due.contains(key)) {
                        throw ScriptMismatch(where + ": agent '" + key + "' is not due for an action");
                    }
                }
                std::map<env::AgentId, env::ActionValue> actions;
                for (const auto& id : due) {
                    const json* value = entry.contains(id) ? &entry[id] : entry.contains("*") ? &entry["*"] : nullptr;
                    if (value == nullptr) {
                        throw ScriptMismatch(where + ": no action for due agent '" + id + "'");
                    }
                    auto action = scripted_action(space.action, *value, where + "." + id);
                    last_action[id] = env::to_string(action);
                    actions.emplace(id, std::move(action));
                }
                const auto result = environment.step(actions);
                for (const auto& [id, obs] : result.observations) {
                    row(used + 1, id, result.rewards.at(id), obs, result.dones.at(id));
                }
                if (result.fault) {
                    err << "stepnet replay: episode ended by agent fault: " << *result.fault << '\n';
                }
            }
            if (!environment.episode_done()) {
                err << "stepnet replay: script exhausted after " << used << " steps; episode truncated\n";
            } else if (used < script.size()) {
                err << "stepnet replay: episode ended after " << used << " steps; " << script.size() - used
                    << " script entries unused\n";
            }
            return static_cast<int>(ok);
        });
}

} // namespace stepnet::cli
