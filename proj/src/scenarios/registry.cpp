#include "stepnet/scenarios/registry.hpp"

#include "stepnet/cartpole/cartpole.hpp"
#include "stepnet/cc/cc_agent.hpp"
#include "stepnet/errors.hpp"
#include "stepnet/json_checks.hpp"

#include <fstream>
#include <memory>
#include <set>

namespace stepnet::scenarios {

using nlohmann::json;

namespace {

cartpole::Params cartpole_params(const json& config) {
    cartpole::Params p;
    if (!config.contains("cartpole")) {
        return p;
    }
    const auto& section = config["cartpole"];
    std::vector<std::string> problems;
    if (!section.is_object()) {
        throw ConfigError({"cartpole: expected an object"});
    }
    for (const auto& [key, value] : section.items()) {
        if (key != "max_episode_steps") {
            problems.push_back("cartpole." + key + ": unknown key");
        }
    }
    if (section.contains("max_episode_steps")) {
        const auto& v = section["max_episode_steps"];
        if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
            problems.push_back("cartpole.max_episode_steps: expected a positive integer");
        } else {
            p.max_episode_steps = v.get<std::uint64_t>();
        }
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    return p;
}

std::shared_ptr<std::ostream> open_timeseries(const std::string& path) {
    auto out = std::make_shared<std::ofstream>(path, std::ios::trunc);
    if (!*out) {
        throw ConfigError({"dumbbell.timeseries.path: cannot open '" + path + "' for writing"});
    }
    *out << "# stepnet timeseries v1\n" << net::Dumbbell::timeseries_header << '\n';
    return out;
}

} // namespace

std::vector<std::string> names() { return {"cartpole", "dumbbell"}; }

env::Environment make_environment(const json& config, std::optional<std::uint64_t> seed) {
    if (!config.is_object()) {
        throw ConfigError({"configuration: expected a JSON object"});
    }
    std::vector<std::string> problems;
    static const std::set<std::string> known{"scenario", "seed",   "max_steps", "event_trace", "cartpole", "dumbbell",
                                             "agent",    "trainer", "eval",     "bench",       "replay"};
    for (const auto& [key, value] : config.items()) {
        if (!known.contains(key)) {
            problems.push_back(key + ": unknown top-level key");
        }
    }
    if (!config.contains("scenario") || !config["scenario"].is_string()) {
        problems.push_back("scenario: required string, one of cartpole, dumbbell");
        throw ConfigError(std::move(problems));
    }
    const std::string name = config["scenario"].get<std::string>();

    env::EnvOptions options;
    options.scenario_name = name;
    if (config.contains("seed")) {
        if (!non_negative_integer(config["seed"])) {
            problems.push_back("seed: expected a non-negative integer");
        } else {
            options.seed = config["seed"].get<std::uint64_t>();
        }
    }
    if (seed) {
        options.seed = *seed;
    }
    std::optional<std::uint64_t> max_steps;
    if (config.contains("max_steps")) {
        if (!config["max_steps"].is_number_integer() || config["max_steps"].get<std::int64_t>() <= 0) {
            problems.push_back("max_steps: expected a positive integer");
        } else {
            max_steps = config["max_steps"].get<std::uint64_t>();
        }
    }
    if (config.contains("event_trace")) {
        if (!config["event_trace"].is_string()) {
            problems.push_back("event_trace: expected a path string");
        } else {
            options.event_trace_path = config["event_trace"].get<std::string>();
        }
    }

    env::ScenarioFactory factory;
    try {
        if (name == "cartpole") {
            const cartpole::Params params = cartpole_params(config);
            options.spaces = cartpole::spaces(params);
            options.max_steps = max_steps.value_or(params.max_episode_steps);
            factory = [params](std::uint64_t) { return std::make_unique<cartpole::CartPole>(params); };
        } else if (name == "dumbbell") {
            cc::ScenarioConfig sc;
            sc.network = net::DumbbellConfig::from_json(config.value("dumbbell", json::object()));
            sc.agent = cc::AgentConfig::from_json(config.value("agent", json::object()));
            options.spaces = cc::spaces();
            options.max_steps = max_steps.value_or(sc.agent.max_steps * sc.network.flows.size());
            std::shared_ptr<std::ostream> timeseries;
            if (problems.empty() && !sc.network.timeseries_path.empty()) {
                timeseries = open_timeseries(sc.network.timeseries_path);
            }
            factory = [sc, timeseries](std::uint64_t) { return std::make_unique<cc::DumbbellScenario>(sc, timeseries); };
        } else {
            problems.push_back("scenario: unknown name '" + name + "' (expected cartpole or dumbbell)");
        }
    } catch (const ConfigError& e) {
        problems.insert(problems.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    return env::Environment(std::move(options), std::move(factory));
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open configuration file '" + path + "'"});
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({"'" + path + "' is not valid JSON: " + e.what()});
    }
}

} // namespace stepnet::scenarios
