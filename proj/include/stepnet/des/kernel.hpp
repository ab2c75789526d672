#pragma once

#include "stepnet/des/event_queue.hpp"
#include "stepnet/des/rng.hpp"

#include <any>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stepnet::des {

/// Anything that can be the target of an event.
class Component {
public:
    virtual ~Component() = default;
    virtual void handle(Event& event) = 0;
};

struct RunResult {
    enum class Status { Matched, Exhausted, Stopped };

    Status status = Status::Exhausted;
    /// The matching event, popped but not dispatched. Set iff Matched.
    std::optional<Event> event;
};

/// Single-threaded discrete-event kernel. Owns the clock and the future event
/// set; components are registered by reference and must outlive the kernel's
/// use of them.
class Kernel {
public:
    explicit Kernel(std::uint64_t seed);

    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;
    Kernel(Kernel&&) = default;
    Kernel& operator=(Kernel&&) = default;

    ComponentId add_component(std::string name, Component& component);
    const std::string& component_name(ComponentId id) const;

    SimTime now() const noexcept { return now_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Schedules `event` at its timestamp; the sequence is assigned here.
    EventHandle schedule(Event event);

    EventHandle schedule_at(SimTime when, ComponentId target, EventKind kind,
                            std::uint32_t tag = 0, std::any payload = {});

    EventHandle schedule_in(SimTime delay, ComponentId target, EventKind kind,
                            std::uint32_t tag = 0, std::any payload = {}) {
        return schedule_at(now_ + delay, target, kind, tag, std::move(payload));
    }

    bool cancel(const EventHandle& handle) { return queue_.cancel(handle); }

    /// Pops events in (timestamp, sequence) order and dispatches each to its
    /// target until `matches` accepts one (returned undispatched), the queue
    /// empties, or a component calls request_stop().
    template <class Predicate>
    RunResult run_until(Predicate&& matches) {
        stop_requested_ = false;
        while (auto next = queue_.pop()) {
            now_ = next->timestamp;
            if (matches(static_cast<const Event&>(*next))) {
                record(*next);
                return RunResult{RunResult::Status::Matched, std::move(next)};
            }
            dispatch(*next);
            if (stop_requested_) {
                stop_requested_ = false;
                return RunResult{RunResult::Status::Stopped, std::nullopt};
            }
        }
        return RunResult{RunResult::Status::Exhausted, std::nullopt};
    }

    /// Makes the running run_until return Stopped after the current dispatch.
    void request_stop() noexcept { stop_requested_ = true; }

    /// Substream `id` of the kernel's root seed.
    RngStream rng(std::string_view id) const { return RngStream(std::string(id), derive_seed(seed_, id)); }

    /// Emits `timestamp_ns,sequence,target,kind` per dispatched or matched event.
    void set_trace(std::ostream* out) noexcept { trace_ = out; }

    std::size_t pending() const noexcept { return queue_.size(); }
    std::uint64_t dispatched() const noexcept { return dispatched_; }

private:
    void dispatch(Event& event);
    void record(const Event& event);

    struct Registered {
        std::string name;
        Component* component;
    };

    std::uint64_t seed_;
    SimTime now_;
    EventQueue queue_;
    std::vector<Registered> components_;
    std::ostream* trace_ = nullptr;
    std::uint64_t dispatched_ = 0;
    bool stop_requested_ = false;
};

} // namespace stepnet::des
