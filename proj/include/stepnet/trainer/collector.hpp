#pragma once

#include "stepnet/trainer/bounded_queue.hpp"
#include "stepnet/trainer/dqn.hpp"
#include "stepnet/trainer/replay_buffer.hpp"

#include "json.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace stepnet::trainer {

struct EpisodeSummary {
    std::size_t worker = 0;
    std::uint64_t seed = 0;
    double reward = 0.0;
    std::uint64_t length = 0;
    std::map<std::string, double> metrics;
};

/// Queue element: a transition, an episode summary, or both.
struct Collected {
    std::optional<Transition> transition;
    std::optional<EpisodeSummary> episode;
};

struct PolicySnapshot {
    std::uint64_t version = 0;
    std::vector<double> params;
    double epsilon = 1.0;
};

/// Latest policy parameters, published by the learner and read by workers.
class PolicyBoard {
public:
    void publish(std::vector<double> params, double epsilon);
    std::shared_ptr<const PolicySnapshot> latest() const;
    std::uint64_t version() const noexcept { return version_.load(std::memory_order_acquire); }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const PolicySnapshot> current_;
    std::atomic<std::uint64_t> version_{0};
};

/// Seed of worker `i`'s environment and exploration streams.
std::uint64_t worker_seed(std::uint64_t seed, std::size_t worker);

/// Environment configuration for workers: file outputs removed.
nlohmann::json worker_environment_config(nlohmann::json config);

/// N rollout workers, each owning one environment, feeding one consumer.
/// Exactly `budget` transitions are delivered unless stopped early. A worker
/// whose environment faults restarts its episode; faults are counted.
class CollectorPool {
public:
    CollectorPool(const nlohmann::json& env_config, const TrainerConfig& config, std::size_t workers,
                  std::uint64_t budget, const PolicyBoard& board);
    ~CollectorPool();

    CollectorPool(const CollectorPool&) = delete;
    CollectorPool& operator=(const CollectorPool&) = delete;

    /// Next element, or nullopt once every worker has finished. Rethrows a
    /// worker's non-environment failure.
    std::optional<Collected> next();

    /// Asks workers to finish and drains the queue until they have.
    void stop();

    std::uint64_t faults() const noexcept { return faults_.load(); }
    std::uint64_t claimed() const noexcept { return std::min(claimed_.load(), budget_); }

private:
    void run_worker(std::size_t index);
    bool claim() { return claimed_.fetch_add(1) < budget_; }
    void join();

    nlohmann::json env_config_;
    TrainerConfig config_;
    std::vector<std::size_t> layers_;
    std::uint64_t budget_;
    const PolicyBoard& board_;
    BoundedQueue<Collected> queue_;
    std::atomic<std::uint64_t> claimed_{0};
    std::atomic<std::uint64_t> faults_{0};
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> running_{0};
    std::vector<std::thread> threads_;
    std::mutex error_mutex_;
    std::exception_ptr error_;
};

/// Collects `budget` transitions with a frozen policy; returns them per worker.
std::vector<std::vector<Transition>> collect(const nlohmann::json& env_config, const TrainerConfig& config,
                                             const std::vector<double>& params, double epsilon, std::size_t workers,
                                             std::uint64_t budget);

} // namespace stepnet::trainer
