#pragma once

#include "stepnet/env/environment.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stepnet::scenarios {

/// Names accepted in the top-level "scenario" key.
std::vector<std::string> names();

/// Builds an environment from a whole configuration document:
///
///   {"scenario": "cartpole" | "dumbbell", "seed": 1, "max_steps": 400,
///    "event_trace": "path", "cartpole": {...}, "dumbbell": {...}, "agent": {...}}
///
/// Sections that belong to the tooling ("trainer", "eval", "bench",
/// "replay") are ignored here. `seed` replaces the configured seed.
/// Throws ConfigError listing every problem found.
env::Environment make_environment(const nlohmann::json& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Reads and parses a JSON file; ConfigError names the path on failure.
nlohmann::json load_config(const std::string& path);

} // namespace stepnet::scenarios
