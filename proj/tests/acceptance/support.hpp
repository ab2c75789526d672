#pragma once

#include "stepnet/des/kernel.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace acceptance {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Fail;
    std::string detail;
};

inline Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
inline Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
inline Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }
inline Outcome verdict(bool ok, std::string d) { return {ok ? Status::Pass : Status::Fail, std::move(d)}; }

using Criterion = std::function<Outcome()>;

/// Dispatches every event up to and including time `t`.
inline void run_to(stepnet::des::Kernel& kernel, stepnet::des::SimTime t) {
    auto r = kernel.run_until([t](const stepnet::des::Event& e) { return e.timestamp > t; });
    if (r.event) {
        kernel.schedule(std::move(*r.event));
    }
}

/// Fresh scratch directory under the working directory.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::current_path() / "acceptance_scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Outcome determinism();
Outcome alpha_scaling();
Outcome reward_oracle();
Outcome queue_law();
Outcome slow_start();
Outcome multi_agent();
Outcome cartpole_equivalence();
Outcome dqn_cartpole();
Outcome scaling();
Outcome cc_training();

} // namespace acceptance
