#include "stepnet/trainer/checkpoint.hpp"

#include "stepnet/des/rng.hpp"
#include "stepnet/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace stepnet::trainer {

using nlohmann::json;

namespace {

// JSON has no infinities; unbounded observation dimensions are spelled out.
json bound_to_json(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

double bound_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        throw CorruptCheckpoint("bad bound '" + s + "'");
    }
    return j.get<double>();
}

json bounds_to_json(const std::vector<env::Bounds>& bounds) {
    json out = json::array();
    for (const auto& b : bounds) {
        out.push_back(json::array({bound_to_json(b.low), bound_to_json(b.high)}));
    }
    return out;
}

std::vector<env::Bounds> bounds_from_json(const json& j) {
    std::vector<env::Bounds> out;
    for (const auto& b : j) {
        out.push_back(env::Bounds{bound_from_json(b.at(0)), bound_from_json(b.at(1))});
    }
    return out;
}

json spaces_to_json(const env::SpaceDescriptor& s) {
    json action;
    if (const auto* d = std::get_if<env::DiscreteSpace>(&s.action)) {
        action = {{"discrete", d->cardinality}};
    } else {
        action = {{"box", bounds_to_json(std::get<env::BoxSpace>(s.action).bounds)}};
    }
    return {{"observation", bounds_to_json(s.observation)}, {"action", action}};
}

env::SpaceDescriptor spaces_from_json(const json& j) {
    env::SpaceDescriptor s;
    s.observation = bounds_from_json(j.at("observation"));
    const auto& action = j.at("action");
    if (action.contains("discrete")) {
        s.action = env::DiscreteSpace{action.at("discrete").get<std::uint64_t>()};
    } else {
        s.action = env::BoxSpace{bounds_from_json(action.at("box"))};
    }
    return s;
}

} // namespace

std::string config_hash(const TrainerConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(des::hash_name(config.to_json().dump())));
    return buf;
}

std::string serialise(const Checkpoint& c) {
    json j;
    j["format"] = "stepnet-checkpoint";
    j["version"] = checkpoint_format_version;
    j["scenario"] = c.scenario;
    j["spaces"] = spaces_to_json(c.spaces);
    j["config"] = c.config.to_json();
    j["config_hash"] = config_hash(c.config);
    j["layers"] = c.layers;
    j["params"] = c.params;
    j["steps"] = c.steps;
    return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptCheckpoint(std::string("not a checkpoint: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "stepnet-checkpoint") {
            throw CorruptCheckpoint("unexpected format tag '" + j.at("format").get<std::string>() + "'");
        }
        const int version = j.at("version").get<int>();
        if (version != checkpoint_format_version) {
            throw CorruptCheckpoint("checkpoint format version " + std::to_string(version) + ", this build reads " +
                                    std::to_string(checkpoint_format_version));
        }
        Checkpoint c;
        c.scenario = j.at("scenario").get<std::string>();
        c.spaces = spaces_from_json(j.at("spaces"));
        c.config = TrainerConfig::from_json(j.at("config"));
        if (config_hash(c.config) != j.at("config_hash").get<std::string>()) {
            throw CorruptCheckpoint("config hash mismatch");
        }
        c.layers = j.at("layers").get<std::vector<std::size_t>>();
        c.params = j.at("params").get<std::vector<double>>();
        c.steps = j.at("steps").get<std::uint64_t>();
        if (QNetwork(c.layers).parameter_count() != c.params.size()) {
            throw CorruptCheckpoint("parameter count does not match the stored layer sizes");
        }
        return c;
    } catch (const CorruptCheckpoint&) {
        throw;
    } catch (const std::exception& e) {
        throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write checkpoint '" + path + "'");
    }
    out << serialise(checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorruptCheckpoint("cannot read checkpoint '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_checkpoint(text.str());
}

Checkpoint load_checkpoint(const std::string& path, const env::SpaceDescriptor& expected) {
    Checkpoint c = load_checkpoint(path);
    if (!(c.spaces == expected)) {
        throw CorruptCheckpoint("checkpoint '" + path + "' was trained on different observation/action spaces");
    }
    return c;
}

QNetwork network_of(const Checkpoint& checkpoint) {
    QNetwork net(checkpoint.layers);
    net.set_parameters(checkpoint.params);
    return net;
}

} // namespace stepnet::trainer
