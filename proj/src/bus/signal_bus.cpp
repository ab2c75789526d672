#include "stepnet/bus/signal_bus.hpp"

#include "stepnet/errors.hpp"

#include <algorithm>

namespace stepnet::bus {

namespace {

template <class T>
constexpr std::size_t index_of() {
    return Payload(T{}).index();
}

/// Required payload alternative for built-in types, or npos for user types.
std::size_t required_index(std::string_view type) {
    if (type == signals::agent_register || type == signals::agent_deregister) {
        return index_of<AgentPayload>();
    }
    if (type == signals::action_broadcast) {
        return index_of<ActionPayload>();
    }
    if (type == signals::obs_report) {
        return index_of<ObservationPayload>();
    }
    if (type == signals::reward_report) {
        return index_of<RewardPayload>();
    }
    if (type == signals::done_report) {
        return index_of<DonePayload>();
    }
    if (type == signals::step_request) {
        return index_of<StepRequestPayload>();
    }
    return std::variant_npos;
}

class DepthGuard {
public:
    explicit DepthGuard(int& depth) : depth_(depth) { ++depth_; }
    ~DepthGuard() { --depth_; }
    DepthGuard(const DepthGuard&) = delete;
    DepthGuard& operator=(const DepthGuard&) = delete;

private:
    int& depth_;
};

} // namespace

void check_payload(const Signal& signal) {
    const auto required = required_index(signal.type);
    if (required != std::variant_npos && signal.payload.index() != required) {
        throw PayloadMismatch("signal " + signal.type + " from '" + signal.source +
                              "' carries payload alternative " +
                              std::to_string(signal.payload.index()) + ", expected " +
                              std::to_string(required));
    }
}

SubscriptionHandle SignalBus::subscribe(std::string_view type, std::string subscriber, Handler handler) {
    const auto handle = next_handle_++;
    auto sub = std::make_shared<Subscription>(Subscription{handle, std::move(subscriber), std::move(handler)});
    by_type_[std::string(type)].push_back(std::move(sub));
    type_of_.emplace(handle, std::string(type));
    return handle;
}

bool SignalBus::unsubscribe(SubscriptionHandle handle) {
    auto it = type_of_.find(handle);
    if (it == type_of_.end()) {
        return false;
    }
    auto& subs = by_type_[it->second];
    auto pos = std::find_if(subs.begin(), subs.end(), [&](const SubscriptionPtr& s) { return s->handle == handle; });
    if (pos != subs.end()) {
        (*pos)->active = false;
        subs.erase(pos);
    }
    type_of_.erase(it);
    return true;
}

std::size_t SignalBus::unsubscribe_all(std::string_view subscriber) {
    std::vector<SubscriptionHandle> doomed;
    for (const auto& [type, subs] : by_type_) {
        for (const auto& s : subs) {
            if (s->subscriber == subscriber) {
                doomed.push_back(s->handle);
            }
        }
    }
    std::sort(doomed.begin(), doomed.end());
    for (auto h : doomed) {
        unsubscribe(h);
    }
    return doomed.size();
}

std::size_t SignalBus::publish(const Signal& signal) {
    check_payload(signal);
    if (depth_ >= max_depth) {
        throw SignalLoop("signal " + signal.type + " published at nesting depth " +
                         std::to_string(depth_ + 1) + " (limit " + std::to_string(max_depth) + ")");
    }
    DepthGuard guard(depth_);

    auto it = by_type_.find(signal.type);
    if (it == by_type_.end() || it->second.empty()) {
        return 0;
    }
    // Snapshot: subscribers added during delivery do not see this signal,
    // subscribers removed during delivery are skipped.
    const std::vector<SubscriptionPtr> targets = it->second;
    std::size_t delivered = 0;
    for (const auto& sub : targets) {
        if (!sub->active) {
            continue;
        }
        const Signal copy = signal;
        sub->handler(copy);
        ++delivered;
    }
    return delivered;
}

std::size_t SignalBus::subscriber_count(std::string_view type) const {
    auto it = by_type_.find(std::string(type));
    return it == by_type_.end() ? 0 : it->second.size();
}

} // namespace stepnet::bus
