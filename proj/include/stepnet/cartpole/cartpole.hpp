#pragma once

#include "stepnet/des/rng.hpp"
#include "stepnet/env/agent.hpp"
#include "stepnet/env/environment.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <numbers>

namespace stepnet::cartpole {

struct State {
    double x = 0.0;
    double x_dot = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;

    friend bool operator==(const State&, const State&) = default;
};

struct Params {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double force = 10.0;
    double tau = 0.02;
    double x_limit = 2.4;
    double theta_limit = 12.0 * 2.0 * std::numbers::pi / 360.0;
    std::uint64_t max_episode_steps = 500;

    /// Throws ConfigError unless every field is positive.
    void validate() const;
};

enum class Push : std::uint64_t { Left = 0, Right = 1 };

/// One explicit Euler step.
State transition(const State& s, Push action, const Params& p = {});

/// True while |x| <= x_limit and |theta| <= theta_limit.
bool live(const State& s, const Params& p = {});

/// Every component uniform in [-0.05, 0.05], drawn in field order.
State reset_state(des::RngStream& rng);

env::SpaceDescriptor spaces(const Params& p = {});

/// The pole as a simulation component: registers at t = 0 and steps every
/// tau of simulated time.
class CartPole final : public env::RlAgent, public env::Scenario {
public:
    explicit CartPole(Params params = {});

    void build(env::RlContext& context) override;

    env::Observation get_obs() override;
    double get_reward() override;
    bool get_done() override;
    void set_action(const env::ActionValue& action) override;

    std::map<std::string, double> metrics() const override;

    const State& state() const noexcept { return state_; }
    std::uint64_t steps() const noexcept { return steps_; }

    static constexpr const char* agent_id = "cartpole";

private:
    Params params_;
    env::RlContext* context_ = nullptr;
    State state_;
    std::uint64_t steps_ = 0;
    double reward_ = 0.0;
};

} // namespace stepnet::cartpole
