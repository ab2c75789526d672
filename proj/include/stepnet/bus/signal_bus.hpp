#pragma once

#include "stepnet/des/sim_time.hpp"
#include "stepnet/env/types.hpp"

#include <any>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace stepnet::bus {

/// Built-in signal type names. Any other name is a user-defined type.
namespace signals {
inline constexpr std::string_view agent_register = "AGENT_REGISTER";
inline constexpr std::string_view agent_deregister = "AGENT_DEREGISTER";
inline constexpr std::string_view action_broadcast = "ACTION_BROADCAST";
inline constexpr std::string_view obs_report = "OBS_REPORT";
inline constexpr std::string_view reward_report = "REWARD_REPORT";
inline constexpr std::string_view done_report = "DONE_REPORT";
inline constexpr std::string_view step_request = "STEP_REQUEST";
} // namespace signals

struct AgentPayload {
    env::AgentId agent;
};
struct ActionPayload {
    env::AgentId agent;
    env::ActionValue action;
};
struct ObservationPayload {
    env::AgentId agent;
    env::Observation values;
};
struct RewardPayload {
    env::AgentId agent;
    double reward = 0.0;
};
struct DonePayload {
    env::AgentId agent;
    bool done = false;
};
struct StepRequestPayload {
    env::AgentId agent;
    des::SimTime duration;
};

using Payload = std::variant<std::monostate, AgentPayload, ActionPayload, ObservationPayload,
                             RewardPayload, DonePayload, StepRequestPayload, std::any>;

struct Signal {
    std::string type;
    std::string source;
    Payload payload;
};

using SubscriptionHandle = std::uint64_t;

/// Synchronous publish/subscribe bus. Delivery happens on the publisher's
/// call stack, in subscription order, and every subscriber gets its own copy
/// of the signal. Publishing from inside a handler is allowed up to
/// max_depth nested publications.
class SignalBus {
public:
    using Handler = std::function<void(const Signal&)>;

    static constexpr int max_depth = 8;

    SubscriptionHandle subscribe(std::string_view type, std::string subscriber, Handler handler);

    /// True iff the subscription was active.
    bool unsubscribe(SubscriptionHandle handle);

    /// Drops every subscription held by `subscriber`; returns how many.
    std::size_t unsubscribe_all(std::string_view subscriber);

    /// Delivers to current subscribers and returns the delivery count.
    /// Throws PayloadMismatch or SignalLoop.
    std::size_t publish(const Signal& signal);

    std::size_t subscriber_count(std::string_view type) const;

private:
    struct Subscription {
        SubscriptionHandle handle;
        std::string subscriber;
        Handler handler;
        bool active = true;
    };
    using SubscriptionPtr = std::shared_ptr<Subscription>;

    std::unordered_map<std::string, std::vector<SubscriptionPtr>> by_type_;
    std::unordered_map<SubscriptionHandle, std::string> type_of_;
    SubscriptionHandle next_handle_ = 1;
    int depth_ = 0;
};

/// Throws PayloadMismatch if a built-in type carries the wrong payload kind.
void check_payload(const Signal& signal);

} // namespace stepnet::bus
