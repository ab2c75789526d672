#include "stepnet/env/environment.hpp"

#include "stepnet/bus/signal_bus.hpp"
#include "stepnet/des/rng.hpp"
#include "stepnet/env/stepper.hpp"
#include "stepnet/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stepnet::env {

namespace {

/// A callback raised; the episode ends with this diagnostic.
class AgentFault : public Error {
    using Error::Error;
};

template <class F>
auto guarded(const AgentId& id, const char* callback, F&& f) {
    try {
        return f();
    } catch (const AgentFault&) {
        throw;
    } catch (const std::exception& ex) {
        throw AgentFault("agent '" + id + "' " + callback + " failed: " + ex.what());
    }
}

/// Platform-side adapter for one registered agent.
class AgentPort {
public:
    AgentPort(AgentId id, RlAgent& agent, bus::SignalBus& bus) : id_(std::move(id)), agent_(agent), bus_(bus) {
        bus_.subscribe(bus::signals::action_broadcast, id_, [this](const bus::Signal& s) {
            const auto& p = std::get<bus::ActionPayload>(s.payload);
            if (p.agent == id_) {
                guarded(id_, "set_action", [&] { agent_.set_action(p.action); });
            }
        });
    }

    void report(const SpaceDescriptor& spaces) {
        Observation obs = guarded(id_, "get_obs", [&] { return agent_.get_obs(); });
        guarded(id_, "get_obs", [&] { validate_observation(spaces, obs); });
        const double reward = guarded(id_, "get_reward", [&] { return agent_.get_reward(); });
        if (!std::isfinite(reward)) {
            throw AgentFault("agent '" + id_ + "' get_reward returned a non-finite value");
        }
        const bool done = guarded(id_, "get_done", [&] { return agent_.get_done(); });
        bus_.publish(bus::Signal{std::string(bus::signals::obs_report), id_, bus::ObservationPayload{id_, std::move(obs)}});
        bus_.publish(bus::Signal{std::string(bus::signals::reward_report), id_, bus::RewardPayload{id_, reward}});
        bus_.publish(bus::Signal{std::string(bus::signals::done_report), id_, bus::DonePayload{id_, done}});
    }

private:
    AgentId id_;
    RlAgent& agent_;
    bus::SignalBus& bus_;
};

} // namespace

struct Environment::World final : RlContext {
    explicit World(std::uint64_t seed, const SpaceDescriptor& spaces)
        : kernel_(seed), stepper(kernel_, bus_), broker(bus_), spaces(spaces) {}

    void register_agent(RlAgent& agent, const AgentId& id) override {
        if (ever_registered.contains(id)) {
            throw DuplicateAgent("agent id '" + id + "' already registered in this episode");
        }
        ever_registered.insert(id);
        ports.emplace(id, std::make_unique<AgentPort>(id, agent, bus_));
        bus_.publish(bus::Signal{std::string(bus::signals::agent_register), id, bus::AgentPayload{id}});
    }

    void deregister_agent(const AgentId& id) override {
        auto it = ports.find(id);
        if (it == ports.end()) {
            throw UnknownAgent("cannot deregister unknown agent '" + id + "'");
        }
        bus_.publish(bus::Signal{std::string(bus::signals::agent_deregister), id, bus::AgentPayload{id}});
        bus_.unsubscribe_all(id);
        // The port may be on the call stack; keep it alive until the episode ends.
        retired.push_back(std::move(it->second));
        ports.erase(it);
    }

    void set_next_step(const AgentId& id, des::SimTime duration) override {
        if (reporting) {
            throw CallbackViolation("set_next_step called from a report callback of '" + id + "'");
        }
        if (duration == des::SimTime::zero()) {
            throw ZeroDuration("agent '" + id + "' requested a zero-length step");
        }
        if (!ports.contains(id)) {
            throw UnknownAgent("set_next_step for unregistered agent '" + id + "'");
        }
        bus_.publish(bus::Signal{std::string(bus::signals::step_request), id, bus::StepRequestPayload{id, duration}});
    }

    void end_episode() override {
        terminal = true;
        kernel_.request_stop();
    }

    des::Kernel& kernel() override { return kernel_; }
    bus::SignalBus& signal_bus() override { return bus_; }

    des::Kernel kernel_;
    bus::SignalBus bus_;
    Stepper stepper;
    Broker broker;
    SpaceDescriptor spaces;
    std::map<AgentId, std::unique_ptr<AgentPort>> ports;
    std::vector<std::unique_ptr<AgentPort>> retired;
    std::set<AgentId> ever_registered;
    std::set<AgentId> finished;
    bool terminal = false;
    bool reporting = false;
    std::unique_ptr<Scenario> scenario;
};

Environment::Environment(EnvOptions options, ScenarioFactory factory)
    : options_(std::move(options)), factory_(std::move(factory)) {
    validate_space(options_.spaces);
    if (!options_.event_trace_path.empty()) {
        auto file = std::make_unique<std::ofstream>(options_.event_trace_path, std::ios::trunc);
        if (!*file) {
            throw ConfigError({"event_trace: cannot open '" + options_.event_trace_path + "' for writing"});
        }
        event_trace_ = std::move(file);
    }
    rebuild(options_.seed);
}

Environment::~Environment() = default;
Environment::Environment(Environment&&) noexcept = default;
Environment& Environment::operator=(Environment&&) noexcept = default;

void Environment::rebuild(std::uint64_t seed) {
    // Tear down the previous world before its replacement registers components.
    world_.reset();
    world_ = std::make_unique<World>(seed, options_.spaces);
    world_->kernel_.set_trace(event_trace_.get());
    world_->scenario = factory_(seed);
    world_->scenario->build(*world_);
}

des::SimTime Environment::now() const { return world_->kernel_.now(); }
Scenario* Environment::scenario() noexcept { return world_ ? world_->scenario.get() : nullptr; }
const Scenario* Environment::scenario() const noexcept { return world_ ? world_->scenario.get() : nullptr; }
des::Kernel& Environment::kernel() { return world_->kernel_; }

std::map<AgentId, Observation> Environment::reset(std::optional<std::uint64_t> seed) {
    if (seed) {
        episode_seed_ = *seed;
    } else if (episodes_ == 0) {
        episode_seed_ = options_.seed;
    } else {
        episode_seed_ = des::mix64(options_.seed ^ des::mix64(episodes_));
    }
    ++episodes_;
    step_count_ = 0;
    due_.clear();
    episode_done_ = false;
    rebuild(episode_seed_);

    auto& w = *world_;
    w.broker.begin_step();
    auto run = w.kernel_.run_until([](const des::Event& e) { return e.kind == des::EventKind::Step; });
    if (run.status != des::RunResult::Status::Matched) {
        episode_done_ = true;
        throw ScenarioError("scenario '" + options_.scenario_name +
                            "' produced no step before the event queue " +
                            (run.status == des::RunResult::Status::Exhausted ? "emptied" : "stopped"));
    }
    StepResult first = collect(w.stepper.take_due(*run.event));
    if (first.fault) {
        throw ScenarioError("fault during reset: " + *first.fault);
    }
    return std::move(first.observations);
}

StepResult Environment::collect(std::vector<AgentId> reporting) {
    auto& w = *world_;
    StepResult result;
    try {
        w.reporting = true;
        for (const auto& id : reporting) {
            auto port = w.ports.find(id);
            if (port != w.ports.end()) {
                port->second->report(options_.spaces);
            }
        }
        w.reporting = false;
    } catch (const AgentFault& fault) {
        w.reporting = false;
        result.fault = fault.what();
    }
    result.observations = w.broker.observations();
    result.rewards = w.broker.rewards();
    result.dones = w.broker.dones();
    // Keep key sets identical even when a fault interrupted reporting.
    for (auto it = result.observations.begin(); it != result.observations.end();) {
        const bool complete = result.rewards.contains(it->first) && result.dones.contains(it->first);
        if (!complete) {
            result.rewards.erase(it->first);
            result.dones.erase(it->first);
            it = result.observations.erase(it);
        } else {
            ++it;
        }
    }

    for (const auto& [id, done] : result.dones) {
        if (done && !w.finished.contains(id)) {
            w.finished.insert(id);
            w.deregister_agent(id);
        }
    }
    due_.clear();
    for (const auto& [id, done] : result.dones) {
        if (!done) {
            due_.insert(id);
        }
    }
    return result;
}

StepResult Environment::step(const std::map<AgentId, ActionValue>& actions) {
    if (episode_done_) {
        throw EpisodeOver("step() called after the episode ended; call reset()");
    }
    auto& w = *world_;
    for (const auto& [id, action] : actions) {
        if (!w.ever_registered.contains(id)) {
            throw UnknownAgent("action for unknown agent '" + id + "'");
        }
        if (!due_.contains(id)) {
            throw UnknownAgent("action for agent '" + id + "' which was not due at the last step");
        }
        validate_action(options_.spaces.action, action);
    }
    for (const auto& id : due_) {
        if (!actions.contains(id)) {
            throw MissingAction("no action supplied for due agent '" + id + "'");
        }
    }

    w.broker.begin_step();
    StepResult result;
    try {
        w.broker.dispatch(actions);
    } catch (const AgentFault& fault) {
        result.fault = fault.what();
    }

    std::vector<AgentId> reporting;
    bool loop_ended = false;
    if (!result.fault) {
        auto run = w.kernel_.run_until([](const des::Event& e) { return e.kind == des::EventKind::Step; });
        if (run.status == des::RunResult::Status::Matched) {
            reporting = w.stepper.take_due(*run.event);
        } else {
            loop_ended = true;
            for (const auto& [id, port] : w.ports) {
                reporting.push_back(id);
            }
        }
    }
    if (!result.fault) {
        result = collect(std::move(reporting));
    }
    ++step_count_;

    const bool all_done = !w.ever_registered.empty() && w.ports.empty() && !w.scenario->expects_more_agents();
    result.episode_done = loop_ended || w.terminal || all_done || step_count_ >= options_.max_steps ||
                          result.fault.has_value();
    episode_done_ = result.episode_done;
    if (episode_done_) {
        due_.clear();
    }
    return result;
}

} // namespace stepnet::env
