#include "stepnet/cc/cc_agent.hpp"

#include "stepnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stepnet::cc {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Branch guard tolerance on d == d_min.
constexpr double same_delay_tolerance = 1e-6;

} // namespace

AgentConfig AgentConfig::from_json(const nlohmann::json& section) {
    AgentConfig c;
    std::vector<std::string> problems;
    if (!section.is_object()) {
        throw ConfigError({"agent: expected an object"});
    }
    auto positive = [&](const char* key, double& out) {
        if (!section.contains(key)) {
            return;
        }
        if (!section[key].is_number() || !(section[key].get<double>() > 0.0)) {
            problems.push_back(std::string("agent.") + key + ": expected a positive number");
            return;
        }
        out = section[key].get<double>();
    };
    static const std::set<std::string> known{"loss_done_threshold", "max_steps", "ssthresh_pkts", "cwnd_cap_pkts",
                                             "step_rtt_multiplier"};
    for (const auto& [key, value] : section.items()) {
        if (!known.contains(key)) {
            problems.push_back("agent." + key + ": unknown key");
        }
    }
    positive("loss_done_threshold", c.loss_done_threshold);
    positive("ssthresh_pkts", c.ssthresh_pkts);
    positive("cwnd_cap_pkts", c.cwnd_cap_pkts);
    positive("step_rtt_multiplier", c.step_rtt_multiplier);
    if (section.contains("max_steps")) {
        if (!section["max_steps"].is_number_integer() || section["max_steps"].get<std::int64_t>() <= 0) {
            problems.push_back("agent.max_steps: expected a positive integer");
        } else {
            c.max_steps = section["max_steps"].get<std::uint64_t>();
        }
    }
    if (c.loss_done_threshold > 1.0) {
        problems.push_back("agent.loss_done_threshold: must not exceed 1");
    }
    if (c.cwnd_cap_pkts <= 1.0) {
        problems.push_back("agent.cwnd_cap_pkts: must exceed 1");
    }
    if (c.ssthresh_pkts < 1.0) {
        problems.push_back("agent.ssthresh_pkts: must be at least 1");
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    return c;
}

double apply_alpha(double cwnd, double alpha, double cap) {
    if (!(alpha >= alpha_low && alpha <= alpha_high)) {
        throw OutOfRange("alpha " + std::to_string(alpha) + " outside [-2, 2]");
    }
    return std::clamp(std::exp2(alpha) * cwnd, 1.0, cap);
}

double normalised_delay(double d, double d_min, double d_max) {
    if (!(d_max > d_min)) {
        return 0.0;
    }
    return clamp01((d - d_min) / (d_max - d_min));
}

double reward_of(double ratio, double loss, double d, double d_min, double d_max) {
    const double base = ratio - loss;
    if (base < 1.0 && d <= d_min * (1.0 + same_delay_tolerance)) {
        return base;
    }
    return base * (d_min / d) * (1.0 - normalised_delay(d, d_min, d_max));
}

namespace {

double throughput_ratio(const net::FlowStats& s) {
    return s.max_throughput_bps > 0.0 ? s.throughput_bps / s.max_throughput_bps : 0.0;
}

} // namespace

env::Observation compute_observation(const net::FlowStats& stats, double cwnd, double cap) {
    const double d = static_cast<double>(stats.srtt.ns());
    const double d_min = static_cast<double>(stats.min_rtt.ns());
    const double d_max = static_cast<double>(stats.max_rtt.ns());
    return {
        clamp01(throughput_ratio(stats)),
        stats.has_rtt ? normalised_delay(d, d_min, d_max) : 0.0,
        clamp01(stats.loss_ratio),
        clamp01(std::log2(std::max(cwnd, 1.0)) / std::log2(cap)),
    };
}

double compute_reward(const net::FlowStats& stats) {
    if (!stats.has_rtt) {
        return throughput_ratio(stats) - stats.loss_ratio;
    }
    return reward_of(throughput_ratio(stats), stats.loss_ratio, static_cast<double>(stats.srtt.ns()),
                     static_cast<double>(stats.min_rtt.ns()), static_cast<double>(stats.max_rtt.ns()));
}

env::SpaceDescriptor spaces() {
    env::SpaceDescriptor s;
    s.observation.assign(4, env::Bounds{0.0, 1.0});
    s.action = env::BoxSpace{{env::Bounds{alpha_low, alpha_high}}};
    return s;
}

const char* to_string(DoneReason reason) noexcept {
    switch (reason) {
    case DoneReason::None:
        return "NONE";
    case DoneReason::Loss:
        return "LOSS";
    case DoneReason::Completed:
        return "COMPLETED";
    case DoneReason::MaxSteps:
        return "MAX_STEPS";
    }
    return "?";
}

// ---------------------------------------------------------------------------

CcAgent::CcAgent(env::RlContext& context, net::Sender& sender, env::AgentId id, AgentConfig config)
    : context_(context), sender_(sender), id_(std::move(id)), config_(config) {
    sender_.set_hooks(net::Sender::Hooks{
        [this](bool) { on_slow_start_exit(); },
        [this] { on_completed(); },
    });
}

void CcAgent::on_slow_start_exit() {
    registered_ = true;
    registered_at_ = context_.kernel().now();
    context_.register_agent(*this, id_);
    if (registered_callback_) {
        registered_callback_();
    }
    schedule_step();
}

void CcAgent::on_completed() {
    completed_ = true;
    if (registered_ && reason_ == DoneReason::None) {
        // Report completion at once rather than at the end of the running step.
        last_duration_ = des::SimTime{1};
        context_.set_next_step(id_, last_duration_);
    }
}

void CcAgent::schedule_step() {
    const auto& stats = sender_.stats();
    const des::SimTime base = stats.has_rtt() ? sender_.stats().windowed_min_rtt(context_.kernel().now())
                                              : net::Sender::initial_rto;
    const double ns = std::round(static_cast<double>(base.ns()) * config_.step_rtt_multiplier);
    last_duration_ = des::SimTime{std::max<std::uint64_t>(1, static_cast<std::uint64_t>(ns))};
    context_.set_next_step(id_, last_duration_);
}

void CcAgent::refresh() {
    const des::SimTime now = context_.kernel().now();
    if (cached_at_ && *cached_at_ == now) {
        return;
    }
    cached_at_ = now;
    const net::FlowStats stats = sender_.step_stats_snapshot();
    obs_ = compute_observation(stats, sender_.cwnd(), config_.cwnd_cap_pkts);
    reward_ = compute_reward(stats);
    if (reason_ == DoneReason::None) {
        if (stats.loss_ratio >= config_.loss_done_threshold) {
            reason_ = DoneReason::Loss;
        } else if (completed_) {
            reason_ = DoneReason::Completed;
        } else if (steps_ >= config_.max_steps) {
            reason_ = DoneReason::MaxSteps;
        }
    }
}

env::Observation CcAgent::get_obs() {
    refresh();
    return obs_;
}

double CcAgent::get_reward() {
    refresh();
    return reward_;
}

bool CcAgent::get_done() {
    refresh();
    return reason_ != DoneReason::None;
}

void CcAgent::set_action(const env::ActionValue& action) {
    const auto* a = std::get_if<env::ContinuousAction>(&action);
    if (a == nullptr || a->values.size() != 1) {
        throw InvalidAction("cc agent expects a single continuous alpha");
    }
    sender_.set_cwnd(apply_alpha(sender_.cwnd(), a->values[0], config_.cwnd_cap_pkts));
    ++steps_;
    schedule_step();
}

// ---------------------------------------------------------------------------

DumbbellScenario::DumbbellScenario(ScenarioConfig config, std::shared_ptr<std::ostream> timeseries)
    : config_(std::move(config)), timeseries_(std::move(timeseries)) {
    config_.network.ssthresh_pkts = config_.agent.ssthresh_pkts;
}

void DumbbellScenario::build(env::RlContext& context) {
    context_ = &context;
    net_ = std::make_unique<net::Dumbbell>(context.kernel(), config_.network);
    baselines_.assign(net_->flow_count(), Baseline{});
    for (std::size_t i = 0; i < net_->flow_count(); ++i) {
        auto agent = std::make_unique<CcAgent>(context, net_->sender(i), "flow" + std::to_string(i + 1),
                                               config_.agent);
        agent->on_registered([this, i] {
            const auto flow = static_cast<std::uint32_t>(i);
            const auto& c = net_->bottleneck().counters(flow);
            baselines_[i] = Baseline{true,       context_->kernel().now(), net_->sender(i).delivered_total(),
                                     c.offered,  c.dropped,                c.served,
                                     c.queue_delay_sum_s};
        });
        agents_.push_back(std::move(agent));
    }
    if (timeseries_) {
        net_->enable_timeseries(*timeseries_, des::SimTime::from_seconds(config_.network.timeseries_interval_ms * 1e-3));
    }
    net_->start();
}

bool DumbbellScenario::expects_more_agents() const {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (!agents_[i]->registered() && !net_->sender(i).completed()) {
            return true;
        }
    }
    return false;
}

std::map<std::string, double> DumbbellScenario::metrics() const {
    std::map<std::string, double> m;
    const auto& cfg = net_->config();
    m["bandwidth_mbps"] = cfg.bandwidth_mbps;
    m["rtt_ms"] = cfg.rtt_ms;
    m["buffer_pkts"] = static_cast<double>(cfg.buffer_pkts);

    const des::SimTime now = context_->kernel().now();
    double bits = 0.0;
    std::uint64_t offered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t served = 0;
    double delay = 0.0;
    std::optional<des::SimTime> first;
    for (std::size_t i = 0; i < baselines_.size(); ++i) {
        const Baseline& b = baselines_[i];
        if (!b.set) {
            continue;
        }
        const net::Sender& s = net_->sender(i);
        const des::SimTime end = s.completed() ? s.completion_time() : now;
        const auto& c = net_->bottleneck().counters(static_cast<std::uint32_t>(i));
        const double flow_bits = static_cast<double>(s.delivered_total() - b.delivered) * net::data_packet_bytes * 8.0;
        const std::string p = "flow" + std::to_string(i + 1) + ".";
        const double span = end > b.at ? (end - b.at).seconds() : 0.0;
        m[p + "norm_throughput"] = span > 0.0 ? flow_bits / span / cfg.bandwidth_bps() : 0.0;
        m[p + "cwnd"] = s.cwnd();
        bits += flow_bits;
        offered += c.offered - b.offered;
        dropped += c.dropped - b.dropped;
        served += c.served - b.served;
        delay += c.queue_delay_sum_s - b.queue_delay_s;
        first = first ? std::min(*first, b.at) : b.at;
    }
    const double span = first && now > *first ? (now - *first).seconds() : 0.0;
    m["norm_throughput"] = span > 0.0 ? bits / span / cfg.bandwidth_bps() : 0.0;
    m["mean_queue_delay_ms"] = served > 0 ? delay / static_cast<double>(served) * 1e3 : 0.0;
    m["loss_rate"] = offered > 0 ? static_cast<double>(dropped) / static_cast<double>(offered) : 0.0;
    return m;
}

} // namespace stepnet::cc
