#include "stepnet/trainer/dqn.hpp"

#include "stepnet/errors.hpp"
#include "stepnet/json_checks.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace stepnet::trainer {

using nlohmann::json;

TrainerConfig TrainerConfig::from_json(const json& section) {
    TrainerConfig c;
    if (!section.is_object()) {
        throw ConfigError({"trainer: expected an object"});
    }
    std::vector<std::string> problems;
    auto real = [&](const char* key, double& out) {
        if (!section.contains(key)) {
            return;
        }
        if (!section[key].is_number()) {
            problems.push_back(std::string("trainer.") + key + ": expected a number");
            return;
        }
        out = section[key].get<double>();
    };
    auto count = [&](const char* key, auto& out) {
        if (!section.contains(key)) {
            return;
        }
        if (!non_negative_integer(section[key])) {
            problems.push_back(std::string("trainer.") + key + ": expected a non-negative integer");
            return;
        }
        out = section[key].get<std::remove_reference_t<decltype(out)>>();
    };
    static const std::set<std::string> known{
        "gamma",           "learning_rate", "optimizer",    "momentum",       "grad_clip",
        "buffer_capacity", "batch_size",    "target_sync",  "epsilon_start",  "epsilon_end",
        "epsilon_decay_steps", "warmup_steps", "train_every", "total_steps",  "workers",
        "action_bins",     "hidden",        "seed",         "snapshot_interval", "queue_capacity",
        "log_interval"};
    for (const auto& [key, value] : section.items()) {
        if (!known.contains(key)) {
            problems.push_back("trainer." + key + ": unknown key");
        }
    }
    real("gamma", c.gamma);
    real("learning_rate", c.learning_rate);
    real("momentum", c.momentum);
    real("grad_clip", c.grad_clip);
    real("epsilon_start", c.epsilon_start);
    real("epsilon_end", c.epsilon_end);
    count("buffer_capacity", c.buffer_capacity);
    count("batch_size", c.batch_size);
    count("target_sync", c.target_sync);
    count("epsilon_decay_steps", c.epsilon_decay_steps);
    count("warmup_steps", c.warmup_steps);
    count("train_every", c.train_every);
    count("total_steps", c.total_steps);
    count("workers", c.workers);
    count("action_bins", c.action_bins);
    count("seed", c.seed);
    count("snapshot_interval", c.snapshot_interval);
    count("queue_capacity", c.queue_capacity);
    count("log_interval", c.log_interval);
    if (section.contains("optimizer")) {
        if (!section["optimizer"].is_string()) {
            problems.push_back("trainer.optimizer: expected a string");
        } else {
            c.optimizer = section["optimizer"].get<std::string>();
        }
    }
    if (section.contains("hidden")) {
        const auto& h = section["hidden"];
        if (!h.is_array() || h.empty()) {
            problems.push_back("trainer.hidden: expected a non-empty array of layer sizes");
        } else {
            c.hidden.clear();
            for (const auto& n : h) {
                if (!non_negative_integer(n) || n.get<std::size_t>() == 0) {
                    problems.push_back("trainer.hidden: layer sizes must be positive integers");
                    break;
                }
                c.hidden.push_back(n.get<std::size_t>());
            }
        }
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    c.validate();
    return c;
}

json TrainerConfig::to_json() const {
    return json{{"gamma", gamma},
                {"learning_rate", learning_rate},
                {"optimizer", optimizer},
                {"momentum", momentum},
                {"grad_clip", grad_clip},
                {"buffer_capacity", buffer_capacity},
                {"batch_size", batch_size},
                {"target_sync", target_sync},
                {"epsilon_start", epsilon_start},
                {"epsilon_end", epsilon_end},
                {"epsilon_decay_steps", epsilon_decay_steps},
                {"warmup_steps", warmup_steps},
                {"train_every", train_every},
                {"total_steps", total_steps},
                {"workers", workers},
                {"action_bins", action_bins},
                {"hidden", hidden},
                {"seed", seed},
                {"snapshot_interval", snapshot_interval},
                {"queue_capacity", queue_capacity},
                {"log_interval", log_interval}};
}

void TrainerConfig::validate() const {
    std::vector<std::string> problems;
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        problems.push_back("trainer.gamma: must lie in [0, 1]");
    }
    if (!(learning_rate > 0.0)) {
        problems.push_back("trainer.learning_rate: must be positive");
    }
    if (optimizer != "sgd_momentum" && optimizer != "adam") {
        problems.push_back("trainer.optimizer: expected sgd_momentum or adam");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        problems.push_back("trainer.momentum: must lie in [0, 1)");
    }
    if (!(grad_clip >= 0.0)) {
        problems.push_back("trainer.grad_clip: must be non-negative");
    }
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
        problems.push_back("trainer.epsilon_start/epsilon_end: must lie in [0, 1]");
    }
    if (buffer_capacity == 0 || batch_size == 0) {
        problems.push_back("trainer.buffer_capacity and trainer.batch_size: must be positive");
    }
    if (target_sync == 0 || train_every == 0 || snapshot_interval == 0 || queue_capacity == 0 || log_interval == 0) {
        problems.push_back("trainer: target_sync, train_every, snapshot_interval, queue_capacity and log_interval must be positive");
    }
    if (workers == 0) {
        problems.push_back("trainer.workers: must be at least 1");
    }
    if (action_bins < 2) {
        problems.push_back("trainer.action_bins: must be at least 2");
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
}

double TrainerConfig::epsilon(std::uint64_t step) const noexcept {
    if (epsilon_decay_steps == 0 || step >= epsilon_decay_steps) {
        return epsilon_end;
    }
    const double f = static_cast<double>(step) / static_cast<double>(epsilon_decay_steps);
    return epsilon_start + f * (epsilon_end - epsilon_start);
}

// ---------------------------------------------------------------------------

double discretise_action(std::size_t index, const env::Bounds& bounds, std::size_t k) {
    if (k < 2) {
        throw IndexOutOfRange("action grid needs at least 2 points, got " + std::to_string(k));
    }
    if (index >= k) {
        throw IndexOutOfRange("action index " + std::to_string(index) + " outside grid of " + std::to_string(k));
    }
    if (index == k - 1) {
        return bounds.high;
    }
    return bounds.low + static_cast<double>(index) * (bounds.high - bounds.low) / static_cast<double>(k - 1);
}

ActionMapper::ActionMapper(env::ActionSpace space, std::size_t k) : space_(std::move(space)), k_(k), size_(1) {
    if (const auto* d = std::get_if<env::DiscreteSpace>(&space_)) {
        size_ = d->cardinality;
        return;
    }
    if (k_ < 2) {
        throw ConfigError({"trainer.action_bins: must be at least 2 for a box action space"});
    }
    for (std::size_t i = 0; i < std::get<env::BoxSpace>(space_).bounds.size(); ++i) {
        size_ *= k_;
    }
}

env::ActionValue ActionMapper::to_action(std::size_t index) const {
    if (index >= size_) {
        throw IndexOutOfRange("action index " + std::to_string(index) + " outside " + std::to_string(size_));
    }
    if (std::holds_alternative<env::DiscreteSpace>(space_)) {
        return env::discrete(index);
    }
    const auto& bounds = std::get<env::BoxSpace>(space_).bounds;
    std::vector<double> values;
    for (const auto& b : bounds) {
        values.push_back(discretise_action(index % k_, b, k_));
        index /= k_;
    }
    return env::continuous(std::move(values));
}

std::uint64_t greedy(const Eigen::VectorXd& q) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < q.size(); ++i) {
        if (q(i) > q(best)) {
            best = i;
        }
    }
    return static_cast<std::uint64_t>(best);
}

std::uint64_t act(const QNetwork& net, const env::Observation& obs, double epsilon, des::RngStream& rng) {
    if (rng.uniform() < epsilon) {
        return rng.below(net.outputs());
    }
    return greedy(net.q_values(obs));
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(std::string kind, double learning_rate, double momentum)
    : kind_(std::move(kind)), lr_(learning_rate), momentum_(momentum) {}

void Optimizer::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (m_.size() != params.size()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    }
    ++t_;
    if (kind_ == "adam") {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
        return;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = momentum_ * m_[i] + grad[i];
        params[i] -= lr_ * m_[i];
    }
}

// ---------------------------------------------------------------------------

Dqn::Dqn(std::vector<std::size_t> layers, const TrainerConfig& config)
    : config_(config),
      online_(layers),
      target_(layers),
      optimizer_(config.optimizer, config.learning_rate, config.momentum) {
    des::RngStream rng("network-init", des::derive_seed(config.seed, "network-init"));
    online_.initialise(rng);
    sync_target();
}

double Dqn::target_of(const Transition& t) const {
    if (t.done) {
        return t.reward;
    }
    return t.reward + config_.gamma * target_.q_values(t.next_observation).maxCoeff();
}

double Dqn::train_step(const ReplayBuffer& buffer, des::RngStream& rng) {
    const auto indices = buffer.sample_indices(config_.batch_size, rng);
    const auto n = static_cast<Eigen::Index>(indices.size());
    const auto dim = static_cast<Eigen::Index>(online_.inputs());
    Eigen::MatrixXd x(dim, n);
    Eigen::MatrixXd next(dim, n);
    std::vector<std::uint64_t> actions(indices.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Transition& t = buffer[indices[static_cast<std::size_t>(i)]];
        x.col(i) = Eigen::Map<const Eigen::VectorXd>(t.observation.data(), dim);
        next.col(i) = Eigen::Map<const Eigen::VectorXd>(t.next_observation.data(), dim);
        actions[static_cast<std::size_t>(i)] = t.action;
    }
    const Eigen::VectorXd next_max = target_.forward(next).colwise().maxCoeff().transpose();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Transition& t = buffer[indices[static_cast<std::size_t>(i)]];
        y(i) = t.done ? t.reward : t.reward + config_.gamma * next_max(i);
    }

    std::vector<double> grad;
    const double loss = online_.td_loss(x, actions, y, &grad);
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite TD loss at gradient step " << gradient_steps_ << " (batch " << n << ", targets "
            << (y.allFinite() ? "finite" : "non-finite") << ")";
        throw NonFiniteLoss(msg.str());
    }
    if (config_.grad_clip > 0.0) {
        double norm = 0.0;
        for (const double g : grad) {
            norm += g * g;
        }
        norm = std::sqrt(norm);
        if (norm > config_.grad_clip) {
            const double scale = config_.grad_clip / norm;
            for (double& g : grad) {
                g *= scale;
            }
        }
    }
    std::vector<double> params = online_.parameters();
    optimizer_.step(params, grad);
    online_.set_parameters(params);
    ++gradient_steps_;
    if (gradient_steps_ % config_.target_sync == 0) {
        sync_target();
    }
    return loss;
}

std::vector<std::size_t> network_layers(const env::SpaceDescriptor& spaces, const TrainerConfig& config) {
    std::vector<std::size_t> layers{spaces.observation_length()};
    layers.insert(layers.end(), config.hidden.begin(), config.hidden.end());
    layers.push_back(ActionMapper(spaces.action, config.action_bins).size());
    return layers;
}

} // namespace stepnet::trainer
