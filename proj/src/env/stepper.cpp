#include "stepnet/env/stepper.hpp"

#include "stepnet/errors.hpp"

namespace stepnet::env {

Stepper::Stepper(des::Kernel& kernel, bus::SignalBus& bus)
    : kernel_(kernel), id_(kernel.add_component(name, *this)) {
    bus.subscribe(bus::signals::agent_register, name, [this](const bus::Signal& s) {
        registered_.insert(std::get<bus::AgentPayload>(s.payload).agent);
    });
    bus.subscribe(bus::signals::agent_deregister, name, [this](const bus::Signal& s) {
        const auto& agent = std::get<bus::AgentPayload>(s.payload).agent;
        forget(agent);
        registered_.erase(agent);
    });
    bus.subscribe(bus::signals::step_request, name, [this](const bus::Signal& s) {
        on_request(std::get<bus::StepRequestPayload>(s.payload));
    });
}

void Stepper::on_request(const bus::StepRequestPayload& request) {
    if (!registered_.contains(request.agent)) {
        throw UnknownAgent("step requested for unregistered agent '" + request.agent + "'");
    }
    if (request.duration == des::SimTime::zero()) {
        throw ZeroDuration("agent '" + request.agent + "' requested a zero-length step");
    }
    forget(request.agent);
    const des::SimTime when = kernel_.now() + request.duration;
    auto slot = slots_.find(when);
    if (slot == slots_.end()) {
        const auto handle = kernel_.schedule_at(when, id_, des::EventKind::Step);
        slot = slots_.emplace(when, Slot{handle, {}}).first;
    }
    slot->second.agents.insert(request.agent);
    pending_[request.agent] = when;
}

void Stepper::forget(const AgentId& id) {
    auto it = pending_.find(id);
    if (it == pending_.end()) {
        return;
    }
    auto slot = slots_.find(it->second);
    pending_.erase(it);
    if (slot == slots_.end()) {
        return;
    }
    slot->second.agents.erase(id);
    if (slot->second.agents.empty()) {
        kernel_.cancel(slot->second.event);
        slots_.erase(slot);
    }
}

std::vector<AgentId> Stepper::take_due(const des::Event& step_event) {
    auto slot = slots_.find(step_event.timestamp);
    if (slot == slots_.end() || slot->second.event.sequence != step_event.sequence) {
        return {};
    }
    std::vector<AgentId> due(slot->second.agents.begin(), slot->second.agents.end());
    for (const auto& a : due) {
        pending_.erase(a);
    }
    slots_.erase(slot);
    return due;
}

std::optional<des::SimTime> Stepper::pending_for(const AgentId& id) const {
    auto it = pending_.find(id);
    if (it == pending_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void Stepper::handle(des::Event& event) {
    throw ScenarioError("STEP event #" + std::to_string(event.sequence) +
                        " was dispatched; only the environment consumes STEP events");
}

// ---------------------------------------------------------------------------

Broker::Broker(bus::SignalBus& bus) : bus_(bus) {
    bus.subscribe(bus::signals::agent_register, name, [this](const bus::Signal& s) {
        known_.insert(std::get<bus::AgentPayload>(s.payload).agent);
    });
    bus.subscribe(bus::signals::agent_deregister, name, [this](const bus::Signal& s) {
        const auto& agent = std::get<bus::AgentPayload>(s.payload).agent;
        known_.erase(agent);
        latest_.erase(agent);
    });
    bus.subscribe(bus::signals::obs_report, name, [this](const bus::Signal& s) {
        const auto& p = std::get<bus::ObservationPayload>(s.payload);
        observations_[p.agent] = p.values;
    });
    bus.subscribe(bus::signals::reward_report, name, [this](const bus::Signal& s) {
        const auto& p = std::get<bus::RewardPayload>(s.payload);
        rewards_[p.agent] = p.reward;
    });
    bus.subscribe(bus::signals::done_report, name, [this](const bus::Signal& s) {
        const auto& p = std::get<bus::DonePayload>(s.payload);
        dones_[p.agent] = p.done;
    });
}

void Broker::begin_step() {
    observations_.clear();
    rewards_.clear();
    dones_.clear();
}

void Broker::dispatch(const std::map<AgentId, ActionValue>& actions) {
    for (const auto& [agent, action] : actions) {
        if (!known_.contains(agent)) {
            throw UnknownAgent("broker has no agent '" + agent + "'");
        }
        latest_[agent] = action;
        bus_.publish(bus::Signal{std::string(bus::signals::action_broadcast), name,
                                 bus::ActionPayload{agent, action}});
    }
}

} // namespace stepnet::env
