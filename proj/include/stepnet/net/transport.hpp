#pragma once

#include "stepnet/des/kernel.hpp"
#include "stepnet/net/packet.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stepnet::net {

struct FlowConfig {
    des::SimTime start;
    /// Packets to deliver; nullopt for an unbounded flow.
    std::optional<std::uint64_t> size_pkts;
    double initial_cwnd = 10.0;
    double ssthresh = 64.0;
};

/// Measurements at a step boundary. Throughputs are in bits per second, the
/// loss ratio is over packets sent during the step.
struct FlowStats {
    double throughput_bps = 0.0;
    double max_throughput_bps = 0.0;
    des::SimTime srtt;
    des::SimTime min_rtt;
    des::SimTime max_rtt;
    /// Minimum RTT over the trailing 10 s.
    des::SimTime windowed_min_rtt;
    double loss_ratio = 0.0;
    std::uint64_t acked_pkts = 0;
    std::uint64_t sent_pkts = 0;
    std::uint64_t lost_pkts = 0;
    des::SimTime duration;
    bool has_rtt = false;
};

/// RTT estimators and per-step counters of one flow.
class FlowStatsTracker {
public:
    static constexpr des::SimTime min_rtt_window = des::SimTime{10'000'000'000ULL};

    void on_rtt_sample(des::SimTime now, des::SimTime rtt);
    void on_sent() { ++step_sent_; }
    void on_delivered(std::uint64_t n) {
        step_acked_ += n;
        interval_acked_ += n;
    }
    void on_lost(std::uint64_t n) { step_lost_ += n; }

    /// Slow-start throughput probe: closes a measurement interval once it
    /// spans at least one smoothed RTT.
    void probe_throughput(des::SimTime now, bool force = false);

    /// Restarts per-step counters at `now`.
    void begin_step(des::SimTime now);

    /// Step view since the last begin_step/snapshot; zeroes the counters.
    FlowStats snapshot(des::SimTime now);

    bool has_rtt() const noexcept { return has_rtt_; }
    des::SimTime srtt() const noexcept { return des::SimTime{static_cast<std::uint64_t>(srtt_ns_ + 0.5)}; }
    des::SimTime min_rtt() const noexcept { return min_rtt_; }
    des::SimTime max_rtt() const noexcept { return max_rtt_; }
    des::SimTime windowed_min_rtt(des::SimTime now);
    double max_throughput_bps() const noexcept { return max_throughput_bps_; }

private:
    bool has_rtt_ = false;
    double srtt_ns_ = 0.0;
    des::SimTime min_rtt_;
    des::SimTime max_rtt_;
    std::deque<std::pair<des::SimTime, des::SimTime>> window_;
    double max_throughput_bps_ = 0.0;

    des::SimTime step_start_;
    std::uint64_t step_acked_ = 0;
    std::uint64_t step_sent_ = 0;
    std::uint64_t step_lost_ = 0;

    des::SimTime interval_start_;
    std::uint64_t interval_acked_ = 0;
};

enum class Phase { SlowStart, RlControlled };

/// Sliding-window sender. Ack-clocked; the window is grown by slow start and
/// afterwards only changed through set_cwnd. Loss is inferred when three
/// packets sent after a hole have been acknowledged (the third duplicate
/// ack), with a retransmission timeout of max(2*srtt, 10 ms) as backstop.
class Sender : public des::Component {
public:
    struct Hooks {
        /// Slow start ended; argument is true when a loss ended it.
        std::function<void(bool)> slow_start_exit;
        std::function<void()> completed;
    };

    static constexpr int dupack_threshold = 3;
    static constexpr des::SimTime min_rto = des::SimTime{10'000'000ULL};
    static constexpr des::SimTime initial_rto = des::SimTime{1'000'000'000ULL};

    Sender(des::Kernel& kernel, std::string name, std::uint32_t flow, FlowConfig config, PacketSink out);

    Sender(const Sender&) = delete;
    Sender& operator=(const Sender&) = delete;

    void set_hooks(Hooks hooks) { hooks_ = std::move(hooks); }

    /// Schedules FLOW_START at the configured start time.
    void schedule_start();

    void on_ack(const Packet& ack);

    /// Fixes the window; values below one packet are clamped to one and
    /// counted. Sends immediately if the new window allows.
    void set_cwnd(double cwnd);

    FlowStats step_stats_snapshot() { return stats_.snapshot(kernel_.now()); }
    FlowStatsTracker& stats() noexcept { return stats_; }
    const FlowStatsTracker& stats() const noexcept { return stats_; }

    std::uint32_t flow() const noexcept { return flow_; }
    double cwnd() const noexcept { return cwnd_; }
    Phase phase() const noexcept { return phase_; }
    bool started() const noexcept { return started_; }
    bool completed() const noexcept { return completed_; }
    std::size_t in_flight() const noexcept { return pipe_; }
    std::uint64_t outstanding() const noexcept { return snd_nxt_ - snd_una_; }
    std::uint64_t snd_una() const noexcept { return snd_una_; }
    std::uint64_t snd_nxt() const noexcept { return snd_nxt_; }
    std::uint64_t dupacks() const noexcept { return dupacks_; }
    std::uint64_t transmissions() const noexcept { return transmissions_; }
    std::uint64_t delivered_total() const noexcept { return delivered_total_; }
    std::uint64_t lost_total() const noexcept { return lost_total_; }
    std::uint64_t cwnd_clamps() const noexcept { return cwnd_clamps_; }
    const FlowConfig& config() const noexcept { return config_; }
    /// cwnd at each slow-start round boundary (first ack of a new round).
    const std::vector<double>& round_cwnds() const noexcept { return round_cwnds_; }
    des::SimTime start_time() const noexcept { return start_time_; }
    des::SimTime completion_time() const noexcept { return completion_time_; }

    void handle(des::Event& event) override;

private:
    enum Tag : std::uint32_t { Start = 0, Rto = 1, End = 2 };

    enum class State : std::uint8_t { InNetwork, Lost, Sacked };
    struct Record {
        State state = State::InNetwork;
        bool retransmitted = false;
    };

    void start();
    void try_send();
    void send(std::uint64_t seq, bool retransmission);
    void mark_lost(std::uint64_t seq);
    void detect_losses();
    void arm_rto();
    void disarm_rto() { rto_deadline_.reset(); }
    void on_rto();
    void end_slow_start(bool loss);
    Record& record(std::uint64_t seq) { return window_[seq - snd_una_]; }
    std::uint64_t window_packets() const;

    des::Kernel& kernel_;
    des::ComponentId id_;
    std::uint32_t flow_;
    FlowConfig config_;
    PacketSink out_;
    Hooks hooks_;
    FlowStatsTracker stats_;

    double cwnd_;
    Phase phase_ = Phase::SlowStart;
    bool started_ = false;
    bool completed_ = false;
    des::SimTime start_time_;
    des::SimTime completion_time_;

    std::uint64_t snd_una_ = 0;
    std::uint64_t snd_nxt_ = 0;
    std::deque<Record> window_;
    std::size_t pipe_ = 0;
    std::optional<std::uint64_t> highest_sacked_;
    std::uint64_t loss_scan_ = 0;
    std::deque<std::uint64_t> retransmit_queue_;
    std::uint64_t dupacks_ = 0;

    std::optional<des::SimTime> rto_deadline_;
    bool rto_timer_pending_ = false;
    std::uint64_t round_end_ = 0;
    /// snd_nxt at slow-start exit. Losses of earlier packets belong to the
    /// slow-start overshoot and are kept out of the per-step loss ratio.
    std::uint64_t rl_start_seq_ = 0;
    std::vector<double> round_cwnds_;

    std::uint64_t transmissions_ = 0;
    std::uint64_t delivered_total_ = 0;
    std::uint64_t lost_total_ = 0;
    std::uint64_t cwnd_clamps_ = 0;
};

/// Cumulative-ack receiver for any number of flows; acks every packet.
class Receiver {
public:
    explicit Receiver(PacketSink ack_out) : ack_out_(std::move(ack_out)) {}

    void on_data(const Packet& data, des::SimTime now);

    std::uint64_t received(std::uint32_t flow) const;
    std::uint64_t next_expected(std::uint32_t flow) const;

private:
    struct FlowState {
        std::uint64_t next = 0;
        std::set<std::uint64_t> out_of_order;
        std::uint64_t received = 0;
    };

    PacketSink ack_out_;
    std::vector<FlowState> flows_;
};

} // namespace stepnet::net
