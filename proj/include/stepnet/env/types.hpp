#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stepnet::env {

using AgentId = std::string;

/// Discrete index or continuous vector.
struct DiscreteAction {
    std::uint64_t index = 0;
    friend bool operator==(const DiscreteAction&, const DiscreteAction&) = default;
};

struct ContinuousAction {
    std::vector<double> values;
    friend bool operator==(const ContinuousAction&, const ContinuousAction&) = default;
};

using ActionValue = std::variant<DiscreteAction, ContinuousAction>;

inline ActionValue discrete(std::uint64_t index) { return DiscreteAction{index}; }
inline ActionValue continuous(std::vector<double> values) { return ContinuousAction{std::move(values)}; }
inline ActionValue continuous(double value) { return ContinuousAction{{value}}; }

using Observation = std::vector<double>;

struct Bounds {
    double low = 0.0;
    double high = 0.0;
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct DiscreteSpace {
    std::uint64_t cardinality = 0;
    friend bool operator==(const DiscreteSpace&, const DiscreteSpace&) = default;
};

struct BoxSpace {
    std::vector<Bounds> bounds;
    friend bool operator==(const BoxSpace&, const BoxSpace&) = default;
};

using ActionSpace = std::variant<DiscreteSpace, BoxSpace>;

struct SpaceDescriptor {
    std::vector<Bounds> observation;
    ActionSpace action;

    std::size_t observation_length() const noexcept { return observation.size(); }

    friend bool operator==(const SpaceDescriptor&, const SpaceDescriptor&) = default;
};

/// Throws InvalidAction when `action` is not a member of `space`.
void validate_action(const ActionSpace& space, const ActionValue& action);

/// Throws ScenarioError when the length differs or an entry is not finite.
void validate_observation(const SpaceDescriptor& space, const Observation& obs);

/// Throws ConfigError when some low > high.
void validate_space(const SpaceDescriptor& space);

std::string to_string(const ActionValue& action);

struct StepResult {
    std::map<AgentId, Observation> observations;
    std::map<AgentId, double> rewards;
    std::map<AgentId, bool> dones;
    bool episode_done = false;
    /// Set when a callback failed and the episode was ended because of it.
    std::optional<std::string> fault;
};

} // namespace stepnet::env
