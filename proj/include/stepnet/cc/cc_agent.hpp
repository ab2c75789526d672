#pragma once

#include "stepnet/env/agent.hpp"
#include "stepnet/env/environment.hpp"
#include "stepnet/net/dumbbell.hpp"

#include "json.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>

namespace stepnet::cc {

inline constexpr double alpha_low = -2.0;
inline constexpr double alpha_high = 2.0;

struct AgentConfig {
    double loss_done_threshold = 0.5;
    std::uint64_t max_steps = 400;
    double ssthresh_pkts = 64.0;
    double cwnd_cap_pkts = 65536.0;
    double step_rtt_multiplier = 2.0;

    static AgentConfig from_json(const nlohmann::json& section);
};

/// 2^alpha * cwnd clamped to [1, cap]. Throws OutOfRange unless
/// alpha_low <= alpha <= alpha_high.
double apply_alpha(double cwnd, double alpha, double cap);

/// (d - d_min) / (d_max - d_min) clamped to [0, 1]; 0 when d_max == d_min.
double normalised_delay(double d, double d_min, double d_max);

/// Reward from its scalar inputs. `ratio` is R / R_max.
double reward_of(double ratio, double loss, double d, double d_min, double d_max);

/// [R/R_max, d~, L, log2(cwnd)/log2(cap)], each clamped to [0, 1].
env::Observation compute_observation(const net::FlowStats& stats, double cwnd, double cap);

double compute_reward(const net::FlowStats& stats);

env::SpaceDescriptor spaces();

enum class DoneReason { None, Loss, Completed, MaxSteps };
const char* to_string(DoneReason reason) noexcept;

/// RL agent controlling one sender's window after slow start.
///
/// Registers itself when slow start ends. Every step ends after
/// step_rtt_multiplier times the windowed minimum RTT; the three report
/// callbacks of one step share a single statistics snapshot.
class CcAgent final : public env::RlAgent {
public:
    CcAgent(env::RlContext& context, net::Sender& sender, env::AgentId id, AgentConfig config);

    CcAgent(const CcAgent&) = delete;
    CcAgent& operator=(const CcAgent&) = delete;

    env::Observation get_obs() override;
    double get_reward() override;
    bool get_done() override;
    void set_action(const env::ActionValue& action) override;

    /// Called right after the agent registers.
    void on_registered(std::function<void()> callback) { registered_callback_ = std::move(callback); }

    const env::AgentId& id() const noexcept { return id_; }
    bool registered() const noexcept { return registered_; }
    DoneReason done_reason() const noexcept { return reason_; }
    /// Actions applied so far; the episode ends at max_steps.
    std::uint64_t steps() const noexcept { return steps_; }
    /// Duration passed to the most recent set_next_step.
    des::SimTime last_step_duration() const noexcept { return last_duration_; }
    des::SimTime registered_at() const noexcept { return registered_at_; }

private:
    void on_slow_start_exit();
    void on_completed();
    void schedule_step();
    void refresh();

    env::RlContext& context_;
    net::Sender& sender_;
    env::AgentId id_;
    AgentConfig config_;

    std::function<void()> registered_callback_;
    bool registered_ = false;
    bool completed_ = false;
    des::SimTime registered_at_;
    des::SimTime last_duration_;
    std::uint64_t steps_ = 0;
    DoneReason reason_ = DoneReason::None;

    std::optional<des::SimTime> cached_at_;
    env::Observation obs_;
    double reward_ = 0.0;
};

struct ScenarioConfig {
    net::DumbbellConfig network;
    AgentConfig agent;
};

/// Dumbbell network with one CC agent per flow ("flow1", "flow2", ...).
class DumbbellScenario final : public env::Scenario {
public:
    /// `timeseries` may be null; when set, rows from every episode go there.
    DumbbellScenario(ScenarioConfig config, std::shared_ptr<std::ostream> timeseries);

    void build(env::RlContext& context) override;
    bool expects_more_agents() const override;
    std::map<std::string, double> metrics() const override;

    net::Dumbbell& network() { return *net_; }
    CcAgent& agent(std::size_t i) { return *agents_.at(i); }

private:
    struct Baseline {
        bool set = false;
        des::SimTime at;
        std::uint64_t delivered = 0;
        std::uint64_t offered = 0;
        std::uint64_t dropped = 0;
        std::uint64_t served = 0;
        double queue_delay_s = 0.0;
    };

    ScenarioConfig config_;
    std::shared_ptr<std::ostream> timeseries_;
    env::RlContext* context_ = nullptr;
    std::unique_ptr<net::Dumbbell> net_;
    std::vector<std::unique_ptr<CcAgent>> agents_;
    std::vector<Baseline> baselines_;
};

} // namespace stepnet::cc
