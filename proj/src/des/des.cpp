#include "stepnet/des/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace stepnet::des {

SimTime SimTime::from_seconds(double s) {
    if (!std::isfinite(s) || s < 0.0) {
        throw TimeOverflow("cannot represent " + std::to_string(s) + " s as simulated time");
    }
    const double ns = std::round(s * 1e9);
    if (ns >= 18446744073709551615.0) {
        throw TimeOverflow("simulated time overflow converting seconds");
    }
    return SimTime{static_cast<rep>(ns)};
}

SimTime serialisation_time(std::uint64_t bytes, double bits_per_second) {
    return SimTime::from_seconds(static_cast<double>(bytes) * 8.0 / bits_per_second);
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
    case EventKind::Timer: return "TIMER";
    case EventKind::PacketArrival: return "PACKET_ARRIVAL";
    case EventKind::Step: return "STEP";
    case EventKind::FlowStart: return "FLOW_START";
    case EventKind::FlowEnd: return "FLOW_END";
    case EventKind::Custom: return "CUSTOM";
    }
    return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// EventQueue

EventHandle EventQueue::push(Event event) {
    event.sequence = next_seq_++;
    EventHandle handle{event.timestamp, event.sequence};
    heap_.push_back(std::move(event));
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    ++live_;
    return handle;
}

bool EventQueue::already_popped(const EventHandle& h) const noexcept {
    if (!any_popped_) {
        return false;
    }
    if (h.timestamp != last_time_) {
        return h.timestamp < last_time_;
    }
    return h.sequence <= last_seq_;
}

bool EventQueue::cancel(const EventHandle& handle) {
    if (handle.sequence >= next_seq_ || already_popped(handle)) {
        return false;
    }
    if (!cancelled_.insert(handle.sequence).second) {
        return false;
    }
    --live_;
    return true;
}

std::optional<Event> EventQueue::pop() {
    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Event event = std::move(heap_.back());
        heap_.pop_back();
        any_popped_ = true;
        last_time_ = event.timestamp;
        last_seq_ = event.sequence;
        if (!cancelled_.empty() && cancelled_.erase(event.sequence) > 0) {
            continue;
        }
        --live_;
        return event;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(std::uint64_t seed) : seed_(seed) {}

ComponentId Kernel::add_component(std::string name, Component& component) {
    components_.push_back(Registered{std::move(name), &component});
    return static_cast<ComponentId>(components_.size() - 1);
}

const std::string& Kernel::component_name(ComponentId id) const {
    return components_.at(id).name;
}

EventHandle Kernel::schedule(Event event) {
    if (event.timestamp < now_) {
        throw SchedulingInPast("event at " + event.timestamp.to_string() +
                               " scheduled while clock is " + now_.to_string());
    }
    if (event.target >= components_.size()) {
        throw DispatchError("event targets unregistered component " + std::to_string(event.target));
    }
    return queue_.push(std::move(event));
}

EventHandle Kernel::schedule_at(SimTime when, ComponentId target, EventKind kind,
                                std::uint32_t tag, std::any payload) {
    Event e;
    e.timestamp = when;
    e.target = target;
    e.kind = kind;
    e.tag = tag;
    e.payload = std::move(payload);
    return schedule(std::move(e));
}

void Kernel::record(const Event& event) {
    if (trace_ != nullptr) {
        *trace_ << event.timestamp.ns() << ',' << event.sequence << ',' << components_[event.target].name << ','
                << to_string(event.kind) << '\n';
    }
}

void Kernel::dispatch(Event& event) {
    auto& target = components_[event.target];
    record(event);
    ++dispatched_;
    try {
        target.component->handle(event);
    } catch (const DispatchError&) {
        throw;
    } catch (const std::exception& ex) {
        throw DispatchError("while dispatching " + std::string(to_string(event.kind)) + " #" +
                            std::to_string(event.sequence) + " at " + event.timestamp.to_string() +
                            " to '" + target.name + "': " + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Random streams

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view id) noexcept {
    return mix64(mix64(root_seed) ^ hash_name(id));
}

RngStream::RngStream(std::string id, std::uint64_t seed)
    : id_(std::move(id)), seed_(seed), engine_(seed) {}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Rejection sampling over the largest multiple of n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

RngStream RngStream::split(std::string_view child_id) const {
    std::string id = id_;
    id += '/';
    id += child_id;
    return RngStream(std::move(id), derive_seed(seed_, child_id));
}

} // namespace stepnet::des
