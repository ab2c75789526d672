#pragma once

#include "stepnet/des/sim_time.hpp"

#include <any>
#include <cstdint>
#include <string_view>

namespace stepnet::des {

using ComponentId = std::uint32_t;

enum class EventKind : std::uint8_t {
    Timer,
    PacketArrival,
    Step,
    FlowStart,
    FlowEnd,
    Custom,
};

std::string_view to_string(EventKind kind) noexcept;

struct Event {
    SimTime timestamp;
    std::uint64_t sequence = 0;
    ComponentId target = 0;
    EventKind kind = EventKind::Custom;
    /// Component-private discriminator, e.g. which timer fired.
    std::uint32_t tag = 0;
    std::any payload;
};

/// Identifies a scheduled event for cancellation.
struct EventHandle {
    SimTime timestamp;
    std::uint64_t sequence = 0;

    friend bool operator==(const EventHandle&, const EventHandle&) = default;
};

} // namespace stepnet::des
