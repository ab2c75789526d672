#include "stepnet/env/types.hpp"

#include "stepnet/errors.hpp"

#include <cmath>
#include <cstdio>

namespace stepnet::env {

void validate_action(const ActionSpace& space, const ActionValue& action) {
    if (const auto* d = std::get_if<DiscreteSpace>(&space)) {
        const auto* a = std::get_if<DiscreteAction>(&action);
        if (a == nullptr) {
            throw InvalidAction("continuous action supplied to a discrete action space");
        }
        if (a->index >= d->cardinality) {
            throw InvalidAction("action index " + std::to_string(a->index) + " outside discrete(" +
                                std::to_string(d->cardinality) + ")");
        }
        return;
    }
    const auto& box = std::get<BoxSpace>(space);
    const auto* a = std::get_if<ContinuousAction>(&action);
    if (a == nullptr) {
        throw InvalidAction("discrete action supplied to a box action space");
    }
    if (a->values.size() != box.bounds.size()) {
        throw InvalidAction("action has " + std::to_string(a->values.size()) + " components, space has " +
                            std::to_string(box.bounds.size()));
    }
    for (std::size_t i = 0; i < box.bounds.size(); ++i) {
        const double v = a->values[i];
        if (!std::isfinite(v) || v < box.bounds[i].low || v > box.bounds[i].high) {
            throw InvalidAction("action component " + std::to_string(i) + " = " + std::to_string(v) +
                                " outside [" + std::to_string(box.bounds[i].low) + ", " +
                                std::to_string(box.bounds[i].high) + "]");
        }
    }
}

void validate_observation(const SpaceDescriptor& space, const Observation& obs) {
    if (obs.size() != space.observation.size()) {
        throw ScenarioError("observation has length " + std::to_string(obs.size()) + ", space declares " +
                            std::to_string(space.observation.size()));
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!std::isfinite(obs[i])) {
            throw ScenarioError("observation entry " + std::to_string(i) + " is not finite");
        }
    }
}

void validate_space(const SpaceDescriptor& space) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < space.observation.size(); ++i) {
        if (!(space.observation[i].low <= space.observation[i].high)) {
            problems.push_back("observation bound " + std::to_string(i) + ": low > high");
        }
    }
    if (const auto* box = std::get_if<BoxSpace>(&space.action)) {
        for (std::size_t i = 0; i < box->bounds.size(); ++i) {
            if (!(box->bounds[i].low <= box->bounds[i].high)) {
                problems.push_back("action bound " + std::to_string(i) + ": low > high");
            }
        }
    } else if (std::get<DiscreteSpace>(space.action).cardinality == 0) {
        problems.push_back("action space: discrete cardinality must be positive");
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
}

std::string to_string(const ActionValue& action) {
    if (const auto* d = std::get_if<DiscreteAction>(&action)) {
        return std::to_string(d->index);
    }
    std::string out;
    char buf[32];
    for (const double v : std::get<ContinuousAction>(action).values) {
        if (!out.empty()) {
            out += ';';
        }
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
    }
    return out;
}

} // namespace stepnet::env
