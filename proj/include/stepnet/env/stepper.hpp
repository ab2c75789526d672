#pragma once

#include "stepnet/bus/signal_bus.hpp"
#include "stepnet/des/kernel.hpp"
#include "stepnet/env/types.hpp"

#include <map>
#include <set>
#include <vector>

namespace stepnet::env {

/// Turns STEP_REQUEST signals into STEP events. Agents whose step ends at the
/// same instant share one STEP event; each agent has at most one pending.
class Stepper : public des::Component {
public:
    static constexpr const char* name = "stepper";

    Stepper(des::Kernel& kernel, bus::SignalBus& bus);

    Stepper(const Stepper&) = delete;
    Stepper& operator=(const Stepper&) = delete;

    des::ComponentId id() const noexcept { return id_; }

    /// Agents whose step ends at `step_event`; their pending entries are cleared.
    std::vector<AgentId> take_due(const des::Event& step_event);

    std::optional<des::SimTime> pending_for(const AgentId& id) const;
    std::size_t pending_events() const noexcept { return slots_.size(); }
    bool knows(const AgentId& id) const { return registered_.contains(id); }

    void handle(des::Event& event) override;

private:
    struct Slot {
        des::EventHandle event;
        std::set<AgentId> agents;
    };

    void on_request(const bus::StepRequestPayload& request);
    void forget(const AgentId& id);

    des::Kernel& kernel_;
    des::ComponentId id_;
    std::set<AgentId> registered_;
    std::map<AgentId, des::SimTime> pending_;
    std::map<des::SimTime, Slot> slots_;
};

/// Routes actions to agents and collects their reports for the in-flight step.
class Broker {
public:
    static constexpr const char* name = "broker";

    explicit Broker(bus::SignalBus& bus);

    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    void begin_step();

    /// Remembers and broadcasts one ACTION_BROADCAST per agent, in id order.
    void dispatch(const std::map<AgentId, ActionValue>& actions);

    const std::map<AgentId, Observation>& observations() const noexcept { return observations_; }
    const std::map<AgentId, double>& rewards() const noexcept { return rewards_; }
    const std::map<AgentId, bool>& dones() const noexcept { return dones_; }
    const std::map<AgentId, ActionValue>& latest_actions() const noexcept { return latest_; }

private:
    bus::SignalBus& bus_;
    std::set<AgentId> known_;
    std::map<AgentId, ActionValue> latest_;
    std::map<AgentId, Observation> observations_;
    std::map<AgentId, double> rewards_;
    std::map<AgentId, bool> dones_;
};

} // namespace stepnet::env
