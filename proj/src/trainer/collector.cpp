#include "stepnet/trainer/collector.hpp"

#include "stepnet/errors.hpp"
#include "stepnet/scenarios/registry.hpp"

#include <spdlog/spdlog.h>

namespace stepnet::trainer {

void PolicyBoard::publish(std::vector<double> params, double epsilon) {
    auto snap = std::make_shared<PolicySnapshot>();
    snap->params = std::move(params);
    snap->epsilon = epsilon;
    std::lock_guard lock(mutex_);
    snap->version = version_.load() + 1;
    current_ = std::move(snap);
    version_.store(current_->version, std::memory_order_release);
}

std::shared_ptr<const PolicySnapshot> PolicyBoard::latest() const {
    std::lock_guard lock(mutex_);
    return current_;
}

std::uint64_t worker_seed(std::uint64_t seed, std::size_t worker) {
    return des::derive_seed(seed, "worker-" + std::to_string(worker));
}

nlohmann::json worker_environment_config(nlohmann::json config) {
    config.erase("event_trace");
    if (config.contains("dumbbell") && config["dumbbell"].is_object()) {
        config["dumbbell"].erase("timeseries");
    }
    return config;
}

CollectorPool::CollectorPool(const nlohmann::json& env_config, const TrainerConfig& config, std::size_t workers,
                             std::uint64_t budget, const PolicyBoard& board)
    : env_config_(worker_environment_config(env_config)),
      config_(config),
      budget_(budget),
      board_(board),
      queue_(config.queue_capacity) {
    if (workers == 0) {
        throw ConfigError({"workers: must be at least 1"});
    }
    if (!board_.latest()) {
        throw Error("collector started before a policy was published");
    }
    // Surfaces configuration errors on the calling thread.
    const auto probe = scenarios::make_environment(env_config_, 0);
    layers_ = network_layers(probe.spaces(), config_);
    running_ = workers;
    for (std::size_t i = 0; i < workers; ++i) {
        threads_.emplace_back([this, i] { run_worker(i); });
    }
}

CollectorPool::~CollectorPool() {
    stop();
}

void CollectorPool::join() {
    for (auto& t : threads_) {
        if (t.joinable()) {
            t.join();
        }
    }
}

void CollectorPool::stop() {
    stop_ = true;
    while (queue_.pop()) {
    }
    join();
}

std::optional<Collected> CollectorPool::next() {
    auto item = queue_.pop();
    if (!item) {
        join();
        std::lock_guard lock(error_mutex_);
        if (error_) {
            std::rethrow_exception(std::exchange(error_, nullptr));
        }
    }
    return item;
}

void CollectorPool::run_worker(std::size_t index) {
    try {
        const std::uint64_t seed = worker_seed(config_.seed, index);
        env::Environment environment = scenarios::make_environment(env_config_, seed);
        const ActionMapper mapper(environment.spaces().action, config_.action_bins);
        des::RngStream explore("explore", des::derive_seed(seed, "explore"));
        QNetwork net(layers_);
        std::uint64_t version = 0;
        double epsilon = 1.0;

        struct Pending {
            env::Observation obs;
            std::uint64_t action;
        };

        bool need_reset = true;
        std::map<env::AgentId, env::Observation> latest;
        std::map<env::AgentId, Pending> pending;
        EpisodeSummary episode;
        int failed_resets = 0;

        while (!stop_) {
            if (board_.version() != version) {
                const auto snap = board_.latest();
                net.set_parameters(snap->params);
                version = snap->version;
                epsilon = snap->epsilon;
            }
            if (need_reset) {
                pending.clear();
                try {
                    latest = environment.reset();
                } catch (const Error& e) {
                    ++faults_;
                    spdlog::warn("worker {}: reset failed: {}", index, e.what());
                    if (++failed_resets >= 100) {
                        throw;
                    }
                    continue;
                }
                failed_resets = 0;
                episode = EpisodeSummary{index, environment.episode_seed(), 0.0, 0, {}};
                need_reset = false;
            }

            std::map<env::AgentId, env::ActionValue> actions;
            for (const auto& id : environment.due_agents()) {
                const auto a = act(net, latest.at(id), epsilon, explore);
                pending[id] = Pending{latest.at(id), a};
                actions.emplace(id, mapper.to_action(a));
            }

            env::StepResult result;
            try {
                result = environment.step(actions);
            } catch (const Error& e) {
                ++faults_;
                spdlog::warn("worker {}: episode fault: {}", index, e.what());
                need_reset = true;
                continue;
            }
            if (result.fault) {
                ++faults_;
                spdlog::warn("worker {}: agent fault: {}", index, *result.fault);
                need_reset = true;
                continue;
            }
            ++episode.length;

            std::vector<Transition> ready;
            for (auto& [id, obs] : result.observations) {
                const double reward = result.rewards.at(id);
                episode.reward += reward;
                if (auto p = pending.find(id); p != pending.end()) {
                    ready.push_back(Transition{std::move(p->second.obs), p->second.action, reward, obs,
                                               result.dones.at(id), id, index});
                    pending.erase(p);
                }
                latest[id] = std::move(obs);
            }
            for (std::size_t i = 0; i < ready.size(); ++i) {
                if (!claim()) {
                    stop_ = true;
                    break;
                }
                Collected item{std::move(ready[i]), std::nullopt};
                if (result.episode_done && i + 1 == ready.size()) {
                    episode.metrics = environment.scenario()->metrics();
                    item.episode = episode;
                }
                queue_.push(std::move(item));
            }
            if (stop_) {
                break;
            }
            if (result.episode_done) {
                if (ready.empty()) {
                    episode.metrics = environment.scenario()->metrics();
                    queue_.push(Collected{std::nullopt, episode});
                }
                need_reset = true;
            }
        }
    } catch (...) {
        std::lock_guard lock(error_mutex_);
        if (!error_) {
            error_ = std::current_exception();
        }
        stop_ = true;
    }
    if (--running_ == 0) {
        queue_.close();
    }
}

std::vector<std::vector<Transition>> collect(const nlohmann::json& env_config, const TrainerConfig& config,
                                             const std::vector<double>& params, double epsilon, std::size_t workers,
                                             std::uint64_t budget) {
    PolicyBoard board;
    board.publish(params, epsilon);
    CollectorPool pool(env_config, config, workers, budget, board);
    std::vector<std::vector<Transition>> out(workers);
    while (auto item = pool.next()) {
        if (item->transition) {
            out[item->transition->worker].push_back(std::move(*item->transition));
        }
    }
    return out;
}

} // namespace stepnet::trainer
