#pragma once

#include "stepnet/des/event.hpp"

#include <optional>
#include <unordered_set>
#include <vector>

namespace stepnet::des {

/// Future event set: a binary heap ordered by (timestamp, sequence) with lazy
/// cancellation. Sequence numbers come from a counter owned by the queue, so
/// equal timestamps pop in insertion order.
class EventQueue {
public:
    EventHandle push(Event event);

    /// True iff the event was pending and is now removed.
    bool cancel(const EventHandle& handle);

    /// Removes and returns the minimum live event, skipping cancelled ones.
    std::optional<Event> pop();

    bool empty() const noexcept { return live_ == 0; }
    std::size_t size() const noexcept { return live_; }

    std::uint64_t next_sequence() const noexcept { return next_seq_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            if (a.timestamp != b.timestamp) {
                return a.timestamp > b.timestamp;
            }
            return a.sequence > b.sequence;
        }
    };

    bool already_popped(const EventHandle& h) const noexcept;

    std::vector<Event> heap_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::uint64_t next_seq_ = 0;
    std::size_t live_ = 0;
    bool any_popped_ = false;
    SimTime last_time_;
    std::uint64_t last_seq_ = 0;
};

} // namespace stepnet::des
