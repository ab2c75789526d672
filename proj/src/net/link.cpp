#include "stepnet/net/link.hpp"

#include "stepnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace stepnet::net {

void LinkParams::validate(const std::string& what) const {
    if (!(bandwidth_bps > 0.0) || !std::isfinite(bandwidth_bps)) {
        throw ConfigError({what + ": bandwidth must be positive and finite"});
    }
}

// ---------------------------------------------------------------------------

Link::Link(des::Kernel& kernel, std::string name, LinkParams params, PacketSink sink)
    : kernel_(kernel), params_(params), sink_(std::move(sink)) {
    params_.validate(name);
    id_ = kernel_.add_component(std::move(name), *this);
}

des::SimTime Link::transmit(Packet packet) {
    const des::SimTime start = std::max(kernel_.now(), busy_until_);
    busy_until_ = start + des::serialisation_time(packet.size_bytes, params_.bandwidth_bps);
    const des::SimTime arrival = busy_until_ + params_.delay;
    pipe_.push_back(std::move(packet));
    kernel_.schedule_at(arrival, id_, des::EventKind::PacketArrival);
    return arrival;
}

std::size_t Link::in_transit(std::uint32_t flow, bool acks) const {
    return static_cast<std::size_t>(std::count_if(pipe_.begin(), pipe_.end(), [&](const Packet& p) {
        return p.flow == flow && p.is_ack == acks;
    }));
}

void Link::handle(des::Event&) {
    Packet p = std::move(pipe_.front());
    pipe_.pop_front();
    sink_(std::move(p));
}

// ---------------------------------------------------------------------------

BottleneckQueue::Admission BottleneckQueue::enqueue(Packet packet) {
    if (queue_.size() >= capacity_) {
        ++drops_;
        return Admission::Dropped;
    }
    queue_.push_back(std::move(packet));
    return Admission::Accepted;
}

Packet BottleneckQueue::pop() {
    Packet p = std::move(queue_.front());
    queue_.pop_front();
    return p;
}

std::size_t BottleneckQueue::count_flow(std::uint32_t flow) const {
    return static_cast<std::size_t>(
        std::count_if(queue_.begin(), queue_.end(), [&](const Packet& p) { return p.flow == flow; }));
}

// ---------------------------------------------------------------------------

BottleneckLink::BottleneckLink(des::Kernel& kernel, std::string name, LinkParams params,
                               std::size_t capacity, PacketSink sink)
    : kernel_(kernel),
      params_(params),
      queue_(capacity),
      sink_(std::move(sink)) {
    params_.validate(name);
    if (capacity == 0) {
        throw ConfigError({name + ": buffer capacity must be at least one packet"});
    }
    serialisation_ = des::serialisation_time(data_packet_bytes, params_.bandwidth_bps);
    id_ = kernel_.add_component(std::move(name), *this);
}

BottleneckLink::FlowCounters& BottleneckLink::counters_mut(std::uint32_t flow) {
    if (flow >= counters_.size()) {
        counters_.resize(flow + 1);
    }
    return counters_[flow];
}

const BottleneckLink::FlowCounters& BottleneckLink::counters(std::uint32_t flow) const {
    static const FlowCounters empty{};
    return flow < counters_.size() ? counters_[flow] : empty;
}

BottleneckQueue::Admission BottleneckLink::offer(Packet packet) {
    auto& c = counters_mut(packet.flow);
    ++c.offered;
    packet.enqueued_at = kernel_.now();
    const std::uint32_t flow = packet.flow;
    const bool was_idle = queue_.empty();
    Packet copy_for_observer;
    if (drop_observer_) {
        copy_for_observer = packet;
    }
    const auto admission = queue_.enqueue(std::move(packet));
    if (admission == BottleneckQueue::Admission::Dropped) {
        ++counters_mut(flow).dropped;
        if (drop_observer_) {
            drop_observer_(copy_for_observer);
        }
        return admission;
    }
    if (was_idle) {
        start_service();
    }
    return admission;
}

void BottleneckLink::start_service() {
    Packet& head = queue_.front();
    auto& c = counters_mut(head.flow);
    c.queue_delay_sum_s += (kernel_.now() - head.enqueued_at).seconds();
    ++c.served;
    kernel_.schedule_in(des::serialisation_time(head.size_bytes, params_.bandwidth_bps), id_,
                        des::EventKind::Timer, SerialisationDone);
}

std::size_t BottleneckLink::propagating(std::uint32_t flow) const {
    return static_cast<std::size_t>(
        std::count_if(pipe_.begin(), pipe_.end(), [&](const Packet& p) { return p.flow == flow; }));
}

void BottleneckLink::handle(des::Event& event) {
    if (event.tag == SerialisationDone) {
        pipe_.push_back(queue_.pop());
        kernel_.schedule_in(params_.delay, id_, des::EventKind::PacketArrival, Arrival);
        if (!queue_.empty()) {
            start_service();
        }
        return;
    }
    Packet p = std::move(pipe_.front());
    pipe_.pop_front();
    sink_(std::move(p));
}

} // namespace stepnet::net
