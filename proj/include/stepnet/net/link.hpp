#pragma once

#include "stepnet/des/kernel.hpp"
#include "stepnet/net/packet.hpp"

#include <deque>
#include <string>
#include <vector>

namespace stepnet::net {

struct LinkParams {
    double bandwidth_bps = 0.0;
    /// One-way propagation delay.
    des::SimTime delay;

    /// Throws ConfigError unless bandwidth > 0.
    void validate(const std::string& what) const;
};

/// Point-to-point link with FIFO serialisation and no buffer limit. A packet
/// handed over at t arrives at max(t, previous serialisation end) +
/// serialisation time + propagation delay. Arrival order equals send order,
/// so packets in transit are kept in a FIFO rather than in event payloads.
class Link : public des::Component {
public:
    Link(des::Kernel& kernel, std::string name, LinkParams params, PacketSink sink);

    Link(const Link&) = delete;
    Link& operator=(const Link&) = delete;

    /// Returns the scheduled arrival time.
    des::SimTime transmit(Packet packet);

    const LinkParams& params() const noexcept { return params_; }
    std::size_t in_transit() const noexcept { return pipe_.size(); }
    std::size_t in_transit(std::uint32_t flow, bool acks) const;

    void handle(des::Event& event) override;

private:
    des::Kernel& kernel_;
    des::ComponentId id_;
    LinkParams params_;
    PacketSink sink_;
    des::SimTime busy_until_;
    std::deque<Packet> pipe_;
};

/// Drop-tail FIFO counted in packets. The packet being serialised still
/// occupies its slot.
class BottleneckQueue {
public:
    enum class Admission { Accepted, Dropped };

    explicit BottleneckQueue(std::size_t capacity) : capacity_(capacity) {}

    Admission enqueue(Packet packet);
    Packet& front() { return queue_.front(); }
    Packet pop();

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t occupancy() const noexcept { return queue_.size(); }
    std::uint64_t drops() const noexcept { return drops_; }
    bool empty() const noexcept { return queue_.empty(); }
    std::size_t count_flow(std::uint32_t flow) const;

private:
    std::size_t capacity_;
    std::deque<Packet> queue_;
    std::uint64_t drops_ = 0;
};

/// Router egress onto the bottleneck: drop-tail queue, serialiser and
/// propagation pipe. Keeps per-flow queueing-delay and drop statistics.
class BottleneckLink : public des::Component {
public:
    struct FlowCounters {
        std::uint64_t offered = 0;
        std::uint64_t dropped = 0;
        std::uint64_t served = 0;
        double queue_delay_sum_s = 0.0;
    };

    using DropObserver = std::function<void(const Packet&)>;

    BottleneckLink(des::Kernel& kernel, std::string name, LinkParams params, std::size_t capacity,
                   PacketSink sink);

    BottleneckLink(const BottleneckLink&) = delete;
    BottleneckLink& operator=(const BottleneckLink&) = delete;

    BottleneckQueue::Admission offer(Packet packet);

    const LinkParams& params() const noexcept { return params_; }
    const BottleneckQueue& queue() const noexcept { return queue_; }
    des::SimTime serialisation() const noexcept { return serialisation_; }
    std::size_t propagating() const noexcept { return pipe_.size(); }
    std::size_t propagating(std::uint32_t flow) const;
    const FlowCounters& counters(std::uint32_t flow) const;

    void on_drop(DropObserver observer) { drop_observer_ = std::move(observer); }

    void handle(des::Event& event) override;

private:
    enum Tag : std::uint32_t { SerialisationDone = 0, Arrival = 1 };

    void start_service();
    FlowCounters& counters_mut(std::uint32_t flow);

    des::Kernel& kernel_;
    des::ComponentId id_;
    LinkParams params_;
    des::SimTime serialisation_;
    BottleneckQueue queue_;
    PacketSink sink_;
    std::deque<Packet> pipe_;
    std::vector<FlowCounters> counters_;
    DropObserver drop_observer_;
};

} // namespace stepnet::net
