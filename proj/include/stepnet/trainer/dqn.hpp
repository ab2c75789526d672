#pragma once

#include "stepnet/des/rng.hpp"
#include "stepnet/env/types.hpp"
#include "stepnet/trainer/qnetwork.hpp"
#include "stepnet/trainer/replay_buffer.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stepnet::trainer {

struct TrainerConfig {
    double gamma = 0.99;
    double learning_rate = 1e-3;
    /// "sgd_momentum" or "adam".
    std::string optimizer = "sgd_momentum";
    double momentum = 0.9;
    /// Global-norm clip of each gradient; 0 disables.
    double grad_clip = 10.0;
    std::size_t buffer_capacity = 100'000;
    std::size_t batch_size = 64;
    /// Gradient steps between target-network copies.
    std::uint64_t target_sync = 500;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::uint64_t epsilon_decay_steps = 10'000;
    std::uint64_t warmup_steps = 1000;
    /// Collected transitions per gradient step.
    std::uint64_t train_every = 1;
    std::uint64_t total_steps = 100'000;
    std::size_t workers = 1;
    std::size_t action_bins = 11;
    std::vector<std::size_t> hidden{64, 64};
    std::uint64_t seed = 0;
    /// Consumed transitions between policy broadcasts to workers.
    std::uint64_t snapshot_interval = 500;
    std::size_t queue_capacity = 4096;
    /// Consumed transitions between training-log rows.
    std::uint64_t log_interval = 1000;

    /// Parses the "trainer" section; unknown keys and bad values are errors.
    static TrainerConfig from_json(const nlohmann::json& section);
    nlohmann::json to_json() const;
    void validate() const;

    /// Linear schedule from epsilon_start to epsilon_end, then constant.
    double epsilon(std::uint64_t step) const noexcept;
};

/// low + index * (high - low) / (k - 1). Throws IndexOutOfRange.
double discretise_action(std::size_t index, const env::Bounds& bounds, std::size_t k);

/// Maps network output indices onto an environment action space. Box spaces
/// are gridded with k points per dimension (index = mixed radix, first
/// dimension fastest).
class ActionMapper {
public:
    ActionMapper(env::ActionSpace space, std::size_t k);

    std::size_t size() const noexcept { return size_; }
    env::ActionValue to_action(std::size_t index) const;

private:
    env::ActionSpace space_;
    std::size_t k_;
    std::size_t size_;
};

/// Argmax with ties to the lowest index under epsilon = 0; uniform with
/// probability epsilon. Always consumes one draw, two when exploring.
std::uint64_t act(const QNetwork& net, const env::Observation& obs, double epsilon, des::RngStream& rng);
std::uint64_t greedy(const Eigen::VectorXd& q);

class Optimizer {
public:
    Optimizer(std::string kind, double learning_rate, double momentum);
    void step(std::vector<double>& params, const std::vector<double>& grad);

private:
    std::string kind_;
    double lr_;
    double momentum_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

/// Online and target networks plus optimiser state.
class Dqn {
public:
    Dqn(std::vector<std::size_t> layers, const TrainerConfig& config);

    /// One gradient step on a uniformly drawn batch. Throws NonFiniteLoss.
    double train_step(const ReplayBuffer& buffer, des::RngStream& rng);

    /// y = r + gamma * (1 - done) * max_a Q_target(s', a).
    double target_of(const Transition& t) const;

    void sync_target() { target_.set_parameters(online_.parameters()); }

    QNetwork& online() noexcept { return online_; }
    const QNetwork& online() const noexcept { return online_; }
    const QNetwork& target() const noexcept { return target_; }
    std::uint64_t gradient_steps() const noexcept { return gradient_steps_; }

private:
    TrainerConfig config_;
    QNetwork online_;
    QNetwork target_;
    Optimizer optimizer_;
    std::uint64_t gradient_steps_ = 0;
};

/// {observation length, hidden..., action count}.
std::vector<std::size_t> network_layers(const env::SpaceDescriptor& spaces, const TrainerConfig& config);

} // namespace stepnet::trainer
