#include "stepnet/net/transport.hpp"

#include "stepnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace stepnet::net {

namespace {
constexpr double bits_per_packet = data_packet_bytes * 8.0;
} // namespace

// ---------------------------------------------------------------------------
// FlowStatsTracker

void FlowStatsTracker::on_rtt_sample(des::SimTime now, des::SimTime rtt) {
    const double sample = static_cast<double>(rtt.ns());
    if (!has_rtt_) {
        has_rtt_ = true;
        srtt_ns_ = sample;
        min_rtt_ = rtt;
        max_rtt_ = rtt;
    } else {
        srtt_ns_ += (sample - srtt_ns_) / 8.0;
        min_rtt_ = std::min(min_rtt_, rtt);
        max_rtt_ = std::max(max_rtt_, rtt);
    }
    while (!window_.empty() && window_.back().second >= rtt) {
        window_.pop_back();
    }
    window_.emplace_back(now, rtt);
    windowed_min_rtt(now);
}

des::SimTime FlowStatsTracker::windowed_min_rtt(des::SimTime now) {
    while (window_.size() > 1 && window_.front().first + min_rtt_window < now) {
        window_.pop_front();
    }
    return window_.empty() ? min_rtt_ : window_.front().second;
}

void FlowStatsTracker::probe_throughput(des::SimTime now, bool force) {
    if (now <= interval_start_) {
        return;
    }
    const des::SimTime elapsed = now - interval_start_;
    if (!force && (!has_rtt_ || elapsed < srtt())) {
        return;
    }
    const double rate = static_cast<double>(interval_acked_) * bits_per_packet / elapsed.seconds();
    max_throughput_bps_ = std::max(max_throughput_bps_, rate);
    interval_start_ = now;
    interval_acked_ = 0;
}

void FlowStatsTracker::begin_step(des::SimTime now) {
    step_start_ = now;
    step_acked_ = 0;
    step_sent_ = 0;
    step_lost_ = 0;
    interval_start_ = now;
    interval_acked_ = 0;
}

FlowStats FlowStatsTracker::snapshot(des::SimTime now) {
    FlowStats s;
    s.duration = now - step_start_;
    s.acked_pkts = step_acked_;
    s.sent_pkts = step_sent_;
    s.lost_pkts = step_lost_;
    if (s.duration > des::SimTime::zero()) {
        s.throughput_bps = static_cast<double>(step_acked_) * bits_per_packet / s.duration.seconds();
    }
    max_throughput_bps_ = std::max(max_throughput_bps_, s.throughput_bps);
    s.max_throughput_bps = max_throughput_bps_;
    s.loss_ratio = step_sent_ == 0 ? 0.0
                                   : std::min(1.0, static_cast<double>(step_lost_) / static_cast<double>(step_sent_));
    s.has_rtt = has_rtt_;
    s.srtt = srtt();
    s.min_rtt = min_rtt_;
    s.max_rtt = max_rtt_;
    s.windowed_min_rtt = windowed_min_rtt(now);
    begin_step(now);
    return s;
}

// ---------------------------------------------------------------------------
// Sender

Sender::Sender(des::Kernel& kernel, std::string name, std::uint32_t flow, FlowConfig config, PacketSink out)
    : kernel_(kernel),
      flow_(flow),
      config_(config),
      out_(std::move(out)),
      cwnd_(std::max(1.0, config.initial_cwnd)) {
    std::vector<std::string> problems;
    if (!(config_.initial_cwnd >= 1.0)) {
        problems.push_back(name + ": initial cwnd must be at least 1 packet");
    }
    if (!(config_.ssthresh >= 1.0)) {
        problems.push_back(name + ": ssthresh must be at least 1 packet");
    }
    if (config_.size_pkts && *config_.size_pkts == 0) {
        problems.push_back(name + ": bounded flow size must be positive");
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    id_ = kernel_.add_component(std::move(name), *this);
}

void Sender::schedule_start() {
    kernel_.schedule_at(config_.start, id_, des::EventKind::FlowStart, Start);
}

void Sender::start() {
    started_ = true;
    start_time_ = kernel_.now();
    stats_.begin_step(start_time_);
    round_cwnds_.push_back(cwnd_);
    try_send();
    round_end_ = snd_nxt_;
}

std::uint64_t Sender::window_packets() const {
    return static_cast<std::uint64_t>(std::max(1.0, std::floor(cwnd_)));
}

void Sender::send(std::uint64_t seq, bool retransmission) {
    Record& rec = record(seq);
    rec.state = State::InNetwork;
    rec.retransmitted = rec.retransmitted || retransmission;
    ++pipe_;
    ++transmissions_;
    stats_.on_sent();
    Packet p;
    p.flow = flow_;
    p.seq = seq;
    p.size_bytes = data_packet_bytes;
    p.retransmission = retransmission;
    p.sent_at = kernel_.now();
    out_(std::move(p));
}

void Sender::try_send() {
    if (!started_ || completed_) {
        return;
    }
    const std::uint64_t window = window_packets();
    while (pipe_ < window) {
        while (!retransmit_queue_.empty() &&
               (retransmit_queue_.front() < snd_una_ || record(retransmit_queue_.front()).state != State::Lost)) {
            retransmit_queue_.pop_front();
        }
        if (!retransmit_queue_.empty()) {
            const auto seq = retransmit_queue_.front();
            retransmit_queue_.pop_front();
            send(seq, true);
            continue;
        }
        if (config_.size_pkts && snd_nxt_ >= *config_.size_pkts) {
            break;
        }
        window_.push_back(Record{});
        send(snd_nxt_++, false);
    }
    if (pipe_ > 0 && !rto_deadline_) {
        arm_rto();
    }
}

void Sender::mark_lost(std::uint64_t seq) {
    Record& rec = record(seq);
    if (rec.state == State::InNetwork) {
        --pipe_;
    }
    rec.state = State::Lost;
    ++lost_total_;
    if (seq >= rl_start_seq_) {
        stats_.on_lost(1);
    }
    retransmit_queue_.push_back(seq);
}

void Sender::detect_losses() {
    if (!highest_sacked_ || *highest_sacked_ < static_cast<std::uint64_t>(dupack_threshold)) {
        return;
    }
    const std::uint64_t limit = *highest_sacked_ - dupack_threshold;
    bool lost = false;
    for (std::uint64_t seq = std::max(loss_scan_, snd_una_); seq <= limit && seq < snd_nxt_; ++seq) {
        Record& rec = record(seq);
        if (rec.state == State::InNetwork && !rec.retransmitted) {
            mark_lost(seq);
            lost = true;
        }
    }
    loss_scan_ = std::max(loss_scan_, limit + 1);
    if (lost) {
        end_slow_start(true);
    }
}

void Sender::on_ack(const Packet& ack) {
    if (!started_ || completed_) {
        return;
    }
    const des::SimTime now = kernel_.now();
    const std::uint64_t cum = std::min(ack.ack, snd_nxt_);
    const bool advanced = cum > snd_una_;
    std::uint64_t delivered = 0;

    if (advanced) {
        if (phase_ == Phase::SlowStart && cum > round_end_) {
            round_cwnds_.push_back(cwnd_);
            round_end_ = snd_nxt_;
        }
        for (std::uint64_t seq = snd_una_; seq < cum; ++seq) {
            const Record& rec = window_.front();
            if (rec.state != State::Sacked) {
                ++delivered;
            }
            if (rec.state == State::InNetwork) {
                --pipe_;
            }
            window_.pop_front();
        }
        snd_una_ = cum;
        dupacks_ = 0;
    } else if (ack.ack == snd_una_ && snd_una_ < snd_nxt_) {
        ++dupacks_;
    }

    if (ack.sacked >= snd_una_ && ack.sacked < snd_nxt_) {
        Record& rec = record(ack.sacked);
        if (rec.state != State::Sacked) {
            if (rec.state == State::InNetwork) {
                --pipe_;
            }
            rec.state = State::Sacked;
            ++delivered;
        }
    }
    if (ack.sacked < snd_nxt_ && (!highest_sacked_ || ack.sacked > *highest_sacked_)) {
        highest_sacked_ = ack.sacked;
    }

    if (delivered > 0) {
        delivered_total_ += delivered;
        stats_.on_delivered(delivered);
        stats_.on_rtt_sample(now, now - ack.echo);
    }

    if (config_.size_pkts && snd_una_ >= *config_.size_pkts) {
        completed_ = true;
        completion_time_ = now;
        disarm_rto();
        kernel_.schedule_at(now, id_, des::EventKind::FlowEnd, End);
        return;
    }

    if (phase_ == Phase::SlowStart && advanced) {
        cwnd_ += 1.0;
        stats_.probe_throughput(now);
        if (cwnd_ >= config_.ssthresh) {
            end_slow_start(false);
        }
    }
    detect_losses();

    if (advanced) {
        if (snd_una_ == snd_nxt_) {
            disarm_rto();
        } else {
            arm_rto();
        }
    }
    try_send();
}

void Sender::end_slow_start(bool loss) {
    if (phase_ != Phase::SlowStart) {
        return;
    }
    phase_ = Phase::RlControlled;
    rl_start_seq_ = snd_nxt_;
    if (loss) {
        cwnd_ = std::max(1.0, cwnd_ / 2.0);
    }
    const des::SimTime now = kernel_.now();
    stats_.probe_throughput(now, stats_.max_throughput_bps() <= 0.0);
    stats_.begin_step(now);
    if (hooks_.slow_start_exit) {
        hooks_.slow_start_exit(loss);
    }
}

void Sender::set_cwnd(double cwnd) {
    if (!(cwnd >= 1.0)) {
        ++cwnd_clamps_;
        cwnd = 1.0;
    }
    cwnd_ = cwnd;
    try_send();
}

void Sender::arm_rto() {
    const des::SimTime timeout =
        stats_.has_rtt() ? std::max(stats_.srtt() * 2, min_rto) : initial_rto;
    rto_deadline_ = kernel_.now() + timeout;
    if (!rto_timer_pending_) {
        rto_timer_pending_ = true;
        kernel_.schedule_at(*rto_deadline_, id_, des::EventKind::Timer, Rto);
    }
}

void Sender::on_rto() {
    rto_deadline_.reset();
    if (snd_una_ == snd_nxt_ || completed_) {
        return;
    }
    retransmit_queue_.clear();
    for (std::uint64_t seq = snd_una_; seq < snd_nxt_; ++seq) {
        Record& rec = record(seq);
        if (rec.state == State::InNetwork) {
            mark_lost(seq);
        } else if (rec.state == State::Lost) {
            retransmit_queue_.push_back(seq);
        }
    }
    end_slow_start(true);
    try_send();
}

void Sender::handle(des::Event& event) {
    switch (event.tag) {
    case Start:
        start();
        break;
    case Rto:
        rto_timer_pending_ = false;
        if (!rto_deadline_) {
            break;
        }
        if (kernel_.now() < *rto_deadline_) {
            // Deadline moved while the timer was pending; re-arm lazily.
            rto_timer_pending_ = true;
            kernel_.schedule_at(*rto_deadline_, id_, des::EventKind::Timer, Rto);
            break;
        }
        on_rto();
        break;
    case End:
        if (hooks_.completed) {
            hooks_.completed();
        }
        break;
    default:
        break;
    }
}

// ---------------------------------------------------------------------------
// Receiver

void Receiver::on_data(const Packet& data, des::SimTime) {
    if (data.flow >= flows_.size()) {
        flows_.resize(data.flow + 1);
    }
    FlowState& st = flows_[data.flow];
    ++st.received;
    if (data.seq == st.next) {
        ++st.next;
        while (!st.out_of_order.empty() && *st.out_of_order.begin() == st.next) {
            st.out_of_order.erase(st.out_of_order.begin());
            ++st.next;
        }
    } else if (data.seq > st.next) {
        st.out_of_order.insert(data.seq);
    }
    Packet ack;
    ack.flow = data.flow;
    ack.is_ack = true;
    ack.size_bytes = ack_packet_bytes;
    ack.ack = st.next;
    ack.sacked = data.seq;
    ack.echo = data.sent_at;
    ack_out_(std::move(ack));
}

std::uint64_t Receiver::received(std::uint32_t flow) const {
    return flow < flows_.size() ? flows_[flow].received : 0;
}

std::uint64_t Receiver::next_expected(std::uint32_t flow) const {
    return flow < flows_.size() ? flows_[flow].next : 0;
}

} // namespace stepnet::net
