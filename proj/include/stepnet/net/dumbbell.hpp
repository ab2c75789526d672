#pragma once

#include "stepnet/des/kernel.hpp"
#include "stepnet/net/link.hpp"
#include "stepnet/net/transport.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace stepnet::net {

struct ParamRange {
    double low = 0.0;
    double high = 0.0;
};

struct FlowSpec {
    double start_s = 0.0;
    /// nullopt: unbounded.
    std::optional<std::uint64_t> size_pkts;
};

/// Dumbbell scenario section. `ranges` replace the fixed value of a
/// dimension with a per-episode uniform draw.
struct DumbbellConfig {
    double bandwidth_mbps = 100.0;
    /// Two-way propagation delay.
    double rtt_ms = 35.0;
    std::uint64_t buffer_pkts = 440;
    double access_mbps = 1000.0;
    double initial_cwnd = 10.0;
    /// Set by the agent section, not parsed here.
    double ssthresh_pkts = 64.0;
    std::vector<FlowSpec> flows{FlowSpec{}};

    std::optional<ParamRange> bandwidth_range;
    std::optional<ParamRange> rtt_range;
    std::optional<ParamRange> buffer_range;

    std::string timeseries_path;
    double timeseries_interval_ms = 10.0;

    /// Parses the section; every problem is reported in one ConfigError.
    static DumbbellConfig from_json(const nlohmann::json& section);

    /// Copy with the ranged dimensions drawn from `rng` (buffer rounded to
    /// whole packets). Draw order: bandwidth, rtt, buffer.
    DumbbellConfig sample(des::RngStream& rng) const;

    double bandwidth_bps() const noexcept { return bandwidth_mbps * 1e6; }
    des::SimTime one_way_delay() const { return des::SimTime::from_seconds(rtt_ms * 1e-3 / 2.0); }
    /// Bandwidth-delay product in data packets.
    double bdp_packets() const noexcept { return bandwidth_bps() * rtt_ms * 1e-3 / (data_packet_bytes * 8.0); }
};

/// Sender hosts, one shared bottleneck, one receiver, shared ack path.
///
///   sender_i -> access_i -> [drop-tail | bottleneck, rtt/2] -> receiver
///   receiver -> ack link (bottleneck rate, rtt/2) -> sender_i
class Dumbbell {
public:
    Dumbbell(des::Kernel& kernel, const DumbbellConfig& config);
    ~Dumbbell();

    Dumbbell(const Dumbbell&) = delete;
    Dumbbell& operator=(const Dumbbell&) = delete;

    /// Schedules every flow's start.
    void start();

    std::size_t flow_count() const noexcept { return senders_.size(); }
    Sender& sender(std::size_t i) { return *senders_.at(i); }
    const Sender& sender(std::size_t i) const { return *senders_.at(i); }
    BottleneckLink& bottleneck() { return *bottleneck_; }
    const BottleneckLink& bottleneck() const { return *bottleneck_; }
    const Receiver& receiver() const { return *receiver_; }
    const DumbbellConfig& config() const noexcept { return config_; }

    /// Data packets of flow i currently inside the network, by location.
    struct Census {
        std::uint64_t transmissions = 0;
        std::uint64_t dropped = 0;
        std::uint64_t on_access = 0;
        std::uint64_t queued = 0;
        std::uint64_t propagating = 0;
        std::uint64_t received = 0;
        bool balanced() const noexcept {
            return transmissions == dropped + on_access + queued + propagating + received;
        }
    };
    Census census(std::size_t i) const;

    /// Periodic CSV rows `t_ns,flow,cwnd,srtt_ns,inflight,queue_occupancy,acked,lost`
    /// until every bounded flow has completed.
    void enable_timeseries(std::ostream& out, des::SimTime interval);

    static constexpr const char* timeseries_header = "t_ns,flow,cwnd,srtt_ns,inflight,queue_occupancy,acked,lost";

private:
    class Sampler;

    des::Kernel& kernel_;
    DumbbellConfig config_;
    std::vector<std::unique_ptr<Link>> access_;
    std::unique_ptr<BottleneckLink> bottleneck_;
    std::unique_ptr<Link> ack_link_;
    std::unique_ptr<Receiver> receiver_;
    std::vector<std::unique_ptr<Sender>> senders_;
    std::unique_ptr<Sampler> sampler_;
};

} // namespace stepnet::net
