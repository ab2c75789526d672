#pragma once

#include "stepnet/des/kernel.hpp"
#include "stepnet/env/types.hpp"

namespace stepnet::bus {
class SignalBus;
}

namespace stepnet::env {

/// Callbacks an in-simulation RL agent implements. The platform calls
/// get_obs, get_reward and get_done (in that order) when the agent's step
/// ends, and set_action when the trainer supplies the next action. The three
/// report callbacks must not schedule anything.
class RlAgent {
public:
    virtual ~RlAgent() = default;

    virtual Observation get_obs() = 0;
    virtual double get_reward() = 0;
    virtual bool get_done() { return false; }
    virtual void set_action(const ActionValue& action) = 0;
};

/// What a scenario component sees of the platform.
class RlContext {
public:
    virtual ~RlContext() = default;

    /// Makes the agent known to stepper and broker. It is not stepped until
    /// it calls set_next_step. Throws DuplicateAgent.
    virtual void register_agent(RlAgent& agent, const AgentId& id) = 0;

    virtual void deregister_agent(const AgentId& id) = 0;

    /// Ends the agent's current step `duration` from now, replacing any
    /// pending step end. Throws UnknownAgent or ZeroDuration.
    virtual void set_next_step(const AgentId& id, des::SimTime duration) = 0;

    /// Scenario-level terminal state: the event loop stops after the current
    /// event and the episode ends.
    virtual void end_episode() = 0;

    virtual des::Kernel& kernel() = 0;
    virtual bus::SignalBus& signal_bus() = 0;
};

} // namespace stepnet::env
