#pragma once

#include "stepnet/des/sim_time.hpp"

#include <cstdint>
#include <functional>

namespace stepnet::net {

inline constexpr std::uint32_t data_packet_bytes = 1500;
inline constexpr std::uint32_t ack_packet_bytes = 40;

struct Packet {
    std::uint32_t flow = 0;
    std::uint64_t seq = 0;
    std::uint32_t size_bytes = data_packet_bytes;
    bool is_ack = false;
    bool retransmission = false;
    /// Cumulative ack: next sequence the receiver expects.
    std::uint64_t ack = 0;
    /// Sequence of the data packet that triggered this ack.
    std::uint64_t sacked = 0;
    /// Data: time the sender put it on the wire.
    des::SimTime sent_at;
    /// Ack: sent_at of the triggering data packet (RTT sampling).
    des::SimTime echo;
    /// Time of admission to the bottleneck queue.
    des::SimTime enqueued_at;
};

using PacketSink = std::function<void(Packet&&)>;

} // namespace stepnet::net
