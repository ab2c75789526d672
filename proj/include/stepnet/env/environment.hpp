#pragma once

#include "stepnet/env/agent.hpp"
#include "stepnet/env/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

namespace stepnet::env {

/// The simulation model behind an environment: builds its components into
/// a fresh kernel on every reset.
class Scenario {
public:
    virtual ~Scenario() = default;

    /// Creates components and schedules initial events. Must not run the kernel.
    virtual void build(RlContext& context) = 0;

    /// True while agents that have not yet registered may still appear.
    virtual bool expects_more_agents() const { return false; }

    /// Episode-level measurements, read by evaluation after the episode.
    virtual std::map<std::string, double> metrics() const { return {}; }
};

/// Creates the scenario for one episode from the episode seed.
using ScenarioFactory = std::function<std::unique_ptr<Scenario>(std::uint64_t episode_seed)>;

struct EnvOptions {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::uint64_t max_steps = 400;
    SpaceDescriptor spaces;
    /// When non-empty, dispatched events are appended here as CSV.
    std::string event_trace_path;
};

/// Environment facade: reset/step over a discrete-event simulation.
///
/// step() hands actions to the broker, which broadcasts them to agents; then
/// runs the event loop until the next STEP event and returns the reports of
/// the agents due at it. Movable between threads while idle; never shared.
class Environment {
public:
    Environment(EnvOptions options, ScenarioFactory factory);
    ~Environment();
    Environment(Environment&&) noexcept;
    Environment& operator=(Environment&&) noexcept;

    /// Rebuilds the world and runs it to the first STEP. Without a seed, the
    /// first episode uses the configured seed and later ones derive from it.
    std::map<AgentId, Observation> reset(std::optional<std::uint64_t> seed = std::nullopt);

    StepResult step(const std::map<AgentId, ActionValue>& actions);

    const SpaceDescriptor& spaces() const noexcept { return options_.spaces; }
    const EnvOptions& options() const noexcept { return options_; }

    /// Agents that must receive an action in the next step().
    const std::set<AgentId>& due_agents() const noexcept { return due_; }

    bool episode_done() const noexcept { return episode_done_; }
    std::uint64_t episode_step() const noexcept { return step_count_; }
    std::uint64_t episode_seed() const noexcept { return episode_seed_; }
    std::uint64_t episodes_started() const noexcept { return episodes_; }
    des::SimTime now() const;

    /// Scenario of the running episode, for metrics; null before initialise.
    Scenario* scenario() noexcept;
    const Scenario* scenario() const noexcept;

    /// Kernel of the running episode (tests and tooling).
    des::Kernel& kernel();

private:
    struct World;

    void rebuild(std::uint64_t seed);
    StepResult collect(std::vector<AgentId> reporting);

    EnvOptions options_;
    ScenarioFactory factory_;
    std::unique_ptr<World> world_;
    std::unique_ptr<std::ostream> event_trace_;
    std::set<AgentId> due_;
    std::uint64_t step_count_ = 0;
    std::uint64_t episode_seed_ = 0;
    std::uint64_t episodes_ = 0;
    bool episode_done_ = true;
};

} // namespace stepnet::env
