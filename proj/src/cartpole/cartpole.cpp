#include "stepnet/cartpole/cartpole.hpp"

#include "stepnet/errors.hpp"

#include <cmath>
#include <limits>

namespace stepnet::cartpole {

void Params::validate() const {
    std::vector<std::string> problems;
    auto check = [&](const char* name, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            problems.push_back(std::string("cartpole.") + name + ": must be positive");
        }
    };
    check("gravity", gravity);
    check("cart_mass", cart_mass);
    check("pole_mass", pole_mass);
    check("half_length", half_length);
    check("force", force);
    check("tau", tau);
    check("x_limit", x_limit);
    check("theta_limit", theta_limit);
    if (max_episode_steps == 0) {
        problems.push_back("cartpole.max_episode_steps: must be positive");
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
}

State transition(const State& s, Push action, const Params& p) {
    const double force = action == Push::Right ? p.force : -p.force;
    const double total_mass = p.cart_mass + p.pole_mass;
    const double pole_moment = p.pole_mass * p.half_length;
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);

    const double temp = (force + pole_moment * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
                             (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;

    State n;
    n.x = s.x + p.tau * s.x_dot;
    n.x_dot = s.x_dot + p.tau * x_acc;
    n.theta = s.theta + p.tau * s.theta_dot;
    n.theta_dot = s.theta_dot + p.tau * theta_acc;
    return n;
}

bool live(const State& s, const Params& p) {
    return std::abs(s.x) <= p.x_limit && std::abs(s.theta) <= p.theta_limit;
}

State reset_state(des::RngStream& rng) {
    State s;
    s.x = rng.uniform(-0.05, 0.05);
    s.x_dot = rng.uniform(-0.05, 0.05);
    s.theta = rng.uniform(-0.05, 0.05);
    s.theta_dot = rng.uniform(-0.05, 0.05);
    return s;
}

env::SpaceDescriptor spaces(const Params& p) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    env::SpaceDescriptor s;
    s.observation = {
        {-2.0 * p.x_limit, 2.0 * p.x_limit},
        {-inf, inf},
        {-2.0 * p.theta_limit, 2.0 * p.theta_limit},
        {-inf, inf},
    };
    s.action = env::DiscreteSpace{2};
    return s;
}

// ---------------------------------------------------------------------------

CartPole::CartPole(Params params) : params_(params) { params_.validate(); }

void CartPole::build(env::RlContext& context) {
    context_ = &context;
    des::RngStream rng = context.kernel().rng("cartpole-reset");
    state_ = reset_state(rng);
    steps_ = 0;
    reward_ = 0.0;
    context.register_agent(*this, agent_id);
    context.set_next_step(agent_id, des::SimTime::from_seconds(params_.tau));
}

env::Observation CartPole::get_obs() { return {state_.x, state_.x_dot, state_.theta, state_.theta_dot}; }

double CartPole::get_reward() { return reward_; }

bool CartPole::get_done() { return !live(state_, params_) || steps_ >= params_.max_episode_steps; }

void CartPole::set_action(const env::ActionValue& action) {
    const auto* a = std::get_if<env::DiscreteAction>(&action);
    if (a == nullptr || a->index > 1) {
        throw InvalidAction("cartpole expects action 0 (left) or 1 (right)");
    }
    state_ = transition(state_, static_cast<Push>(a->index), params_);
    ++steps_;
    reward_ = 1.0;
    context_->set_next_step(agent_id, des::SimTime::from_seconds(params_.tau));
}

std::map<std::string, double> CartPole::metrics() const {
    return {{"ep_len", static_cast<double>(steps_)}};
}

} // namespace stepnet::cartpole
