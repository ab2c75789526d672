#pragma once

#include "stepnet/env/types.hpp"
#include "stepnet/trainer/dqn.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stepnet::trainer {

inline constexpr int checkpoint_format_version = 1;

struct Checkpoint {
    std::string scenario;
    env::SpaceDescriptor spaces;
    TrainerConfig config;
    std::vector<std::size_t> layers;
    std::vector<double> params;
    std::uint64_t steps = 0;
};

/// Stable text form (sorted keys, shortest round-trip doubles), so that
/// serialise(parse(serialise(c))) == serialise(c).
std::string serialise(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws CorruptCheckpoint on unreadable, malformed or version-mismatched files.
Checkpoint load_checkpoint(const std::string& path);

/// As above, and also when the stored spaces differ from `expected`.
Checkpoint load_checkpoint(const std::string& path, const env::SpaceDescriptor& expected);

/// FNV-1a of the canonical trainer configuration.
std::string config_hash(const TrainerConfig& config);

/// Network carrying the checkpoint's parameters.
QNetwork network_of(const Checkpoint& checkpoint);

} // namespace stepnet::trainer
