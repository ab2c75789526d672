#include "stepnet/net/dumbbell.hpp"

#include "stepnet/errors.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace stepnet::net {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& section, std::string prefix) : section_(section), prefix_(std::move(prefix)) {}

    void number(const char* key, double& out, bool positive = true) {
        if (!section_.contains(key)) {
            return;
        }
        const auto& v = section_.at(key);
        if (!v.is_number()) {
            problems.push_back(prefix_ + key + ": expected a number");
            return;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d) || (positive ? d <= 0.0 : d < 0.0)) {
            problems.push_back(prefix_ + key + (positive ? ": must be positive" : ": must be non-negative"));
            return;
        }
        out = d;
    }

    void count(const char* key, std::uint64_t& out) {
        if (!section_.contains(key)) {
            return;
        }
        const auto& v = section_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
            problems.push_back(prefix_ + key + ": expected a positive integer");
            return;
        }
        out = v.get<std::uint64_t>();
    }

    std::optional<ParamRange> range(const json& ranges, const char* key) {
        if (!ranges.contains(key)) {
            return std::nullopt;
        }
        const auto& r = ranges.at(key);
        const std::string where = prefix_ + "ranges." + key;
        if (!r.is_object() || !r.contains("low") || !r.contains("high") || !r["low"].is_number() ||
            !r["high"].is_number()) {
            problems.push_back(where + ": expected {low, high} numbers");
            return std::nullopt;
        }
        ParamRange out{r["low"].get<double>(), r["high"].get<double>()};
        if (!(out.low > 0.0) || !(out.low <= out.high) || !std::isfinite(out.high)) {
            problems.push_back(where + ": need 0 < low <= high");
            return std::nullopt;
        }
        return out;
    }

    std::vector<std::string> problems;

private:
    const json& section_;
    std::string prefix_;
};

} // namespace

DumbbellConfig DumbbellConfig::from_json(const json& section) {
    DumbbellConfig c;
    if (!section.is_object()) {
        throw ConfigError({"dumbbell: expected an object"});
    }
    static const std::set<std::string> known{"bandwidth_mbps", "rtt_ms",  "buffer_pkts", "access_mbps",
                                             "initial_cwnd",   "flows",   "ranges",      "timeseries"};
    Reader r(section, "dumbbell.");
    for (const auto& [key, value] : section.items()) {
        if (!known.contains(key)) {
            r.problems.push_back("dumbbell." + key + ": unknown key");
        }
    }
    r.number("bandwidth_mbps", c.bandwidth_mbps);
    r.number("rtt_ms", c.rtt_ms, false);
    r.count("buffer_pkts", c.buffer_pkts);
    r.number("access_mbps", c.access_mbps);
    r.number("initial_cwnd", c.initial_cwnd);
    if (c.initial_cwnd < 1.0) {
        r.problems.push_back("dumbbell.initial_cwnd: must be at least 1");
    }

    if (section.contains("flows")) {
        const auto& flows = section["flows"];
        c.flows.clear();
        if (!flows.is_array() || flows.empty()) {
            r.problems.push_back("dumbbell.flows: expected a non-empty array");
        } else {
            for (std::size_t i = 0; i < flows.size(); ++i) {
                const auto& f = flows[i];
                const std::string where = "dumbbell.flows[" + std::to_string(i) + "]";
                FlowSpec spec;
                if (!f.is_object()) {
                    r.problems.push_back(where + ": expected an object");
                    continue;
                }
                if (f.contains("start_s")) {
                    if (!f["start_s"].is_number() || !(f["start_s"].get<double>() >= 0.0)) {
                        r.problems.push_back(where + ".start_s: expected a non-negative number");
                    } else {
                        spec.start_s = f["start_s"].get<double>();
                    }
                }
                if (f.contains("size_pkts")) {
                    const auto& s = f["size_pkts"];
                    if (s.is_string() && s.get<std::string>() == "unbounded") {
                        spec.size_pkts.reset();
                    } else if (s.is_number_integer() && s.get<std::int64_t>() > 0) {
                        spec.size_pkts = s.get<std::uint64_t>();
                    } else {
                        r.problems.push_back(where + ".size_pkts: expected a positive integer or \"unbounded\"");
                    }
                }
                c.flows.push_back(spec);
            }
        }
    }

    if (section.contains("ranges")) {
        const auto& ranges = section["ranges"];
        if (!ranges.is_object()) {
            r.problems.push_back("dumbbell.ranges: expected an object");
        } else {
            c.bandwidth_range = r.range(ranges, "bandwidth_mbps");
            c.rtt_range = r.range(ranges, "rtt_ms");
            c.buffer_range = r.range(ranges, "buffer_pkts");
            for (const auto& [key, value] : ranges.items()) {
                if (key != "bandwidth_mbps" && key != "rtt_ms" && key != "buffer_pkts") {
                    r.problems.push_back("dumbbell.ranges." + key + ": unknown dimension");
                }
            }
        }
    }

    if (section.contains("timeseries")) {
        const auto& ts = section["timeseries"];
        if (!ts.is_object() || !ts.contains("path") || !ts["path"].is_string()) {
            r.problems.push_back("dumbbell.timeseries: expected {path, interval_ms}");
        } else {
            c.timeseries_path = ts["path"].get<std::string>();
            Reader tr(ts, "dumbbell.timeseries.");
            tr.number("interval_ms", c.timeseries_interval_ms);
            r.problems.insert(r.problems.end(), tr.problems.begin(), tr.problems.end());
        }
    }

    if (!r.problems.empty()) {
        throw ConfigError(std::move(r.problems));
    }
    return c;
}

DumbbellConfig DumbbellConfig::sample(des::RngStream& rng) const {
    DumbbellConfig c = *this;
    if (bandwidth_range) {
        c.bandwidth_mbps = rng.uniform(bandwidth_range->low, bandwidth_range->high);
    }
    if (rtt_range) {
        c.rtt_ms = rng.uniform(rtt_range->low, rtt_range->high);
    }
    if (buffer_range) {
        c.buffer_pkts = static_cast<std::uint64_t>(std::llround(rng.uniform(buffer_range->low, buffer_range->high)));
        c.buffer_pkts = std::max<std::uint64_t>(c.buffer_pkts, 1);
    }
    c.bandwidth_range.reset();
    c.rtt_range.reset();
    c.buffer_range.reset();
    return c;
}

// ---------------------------------------------------------------------------

class Dumbbell::Sampler : public des::Component {
public:
    Sampler(des::Kernel& kernel, Dumbbell& net, std::ostream& out, des::SimTime interval)
        : kernel_(kernel), net_(net), out_(out), interval_(interval) {
        id_ = kernel_.add_component("timeseries", *this);
        kernel_.schedule_at(kernel_.now(), id_, des::EventKind::Timer);
    }

    void handle(des::Event&) override {
        bool live = false;
        char line[256];
        for (std::size_t i = 0; i < net_.flow_count(); ++i) {
            const Sender& s = net_.sender(i);
            live = live || !s.completed();
            if (!s.started() || s.completed()) {
                continue;
            }
            std::snprintf(line, sizeof line, "%llu,%zu,%.17g,%llu,%zu,%zu,%llu,%llu\n",
                          static_cast<unsigned long long>(kernel_.now().ns()), i + 1, s.cwnd(),
                          static_cast<unsigned long long>(s.stats().srtt().ns()), s.in_flight(),
                          net_.bottleneck().queue().occupancy(),
                          static_cast<unsigned long long>(s.delivered_total()),
                          static_cast<unsigned long long>(s.lost_total()));
            out_ << line;
        }
        if (live) {
            kernel_.schedule_in(interval_, id_, des::EventKind::Timer);
        }
    }

private:
    des::Kernel& kernel_;
    Dumbbell& net_;
    std::ostream& out_;
    des::SimTime interval_;
    des::ComponentId id_;
};

Dumbbell::Dumbbell(des::Kernel& kernel, const DumbbellConfig& config) : kernel_(kernel), config_(config) {
    if (config_.bandwidth_range || config_.rtt_range || config_.buffer_range) {
        des::RngStream rng = kernel_.rng("network-params");
        config_ = config_.sample(rng);
    }
    const des::SimTime half = config_.one_way_delay();

    receiver_ = std::make_unique<Receiver>([this](Packet&& ack) { ack_link_->transmit(std::move(ack)); });
    ack_link_ = std::make_unique<Link>(kernel_, "ack-link", LinkParams{config_.bandwidth_bps(), half},
                                       [this](Packet&& ack) { senders_[ack.flow]->on_ack(ack); });
    bottleneck_ = std::make_unique<BottleneckLink>(
        kernel_, "bottleneck", LinkParams{config_.bandwidth_bps(), half}, config_.buffer_pkts,
        [this](Packet&& data) { receiver_->on_data(data, kernel_.now()); });

    for (std::size_t i = 0; i < config_.flows.size(); ++i) {
        const std::string n = std::to_string(i + 1);
        access_.push_back(std::make_unique<Link>(kernel_, "access" + n,
                                                 LinkParams{config_.access_mbps * 1e6, des::SimTime::zero()},
                                                 [this](Packet&& data) { bottleneck_->offer(std::move(data)); }));
        FlowConfig fc;
        fc.start = des::SimTime::from_seconds(config_.flows[i].start_s);
        fc.size_pkts = config_.flows[i].size_pkts;
        fc.initial_cwnd = config_.initial_cwnd;
        fc.ssthresh = config_.ssthresh_pkts;
        Link* access = access_.back().get();
        senders_.push_back(std::make_unique<Sender>(kernel_, "sender" + n, static_cast<std::uint32_t>(i), fc,
                                                    [access](Packet&& data) { access->transmit(std::move(data)); }));
    }
}

Dumbbell::~Dumbbell() = default;

void Dumbbell::start() {
    for (auto& s : senders_) {
        s->schedule_start();
    }
}

Dumbbell::Census Dumbbell::census(std::size_t i) const {
    const auto flow = static_cast<std::uint32_t>(i);
    Census c;
    c.transmissions = senders_.at(i)->transmissions();
    c.dropped = bottleneck_->counters(flow).dropped;
    c.on_access = access_.at(i)->in_transit();
    c.queued = bottleneck_->queue().count_flow(flow);
    c.propagating = bottleneck_->propagating(flow);
    c.received = receiver_->received(flow);
    return c;
}

void Dumbbell::enable_timeseries(std::ostream& out, des::SimTime interval) {
    sampler_ = std::make_unique<Sampler>(kernel_, *this, out, interval);
}

} // namespace stepnet::net
