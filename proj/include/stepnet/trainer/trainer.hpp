#pragma once

#include "stepnet/trainer/checkpoint.hpp"
#include "stepnet/trainer/collector.hpp"
#include "stepnet/trainer/dqn.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace stepnet::trainer {

/// One training-log row.
struct Progress {
    double wall_ms = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t episodes = 0;
    /// Over episodes finished since the previous row; NaN when none did.
    double mean_episode_reward = 0.0;
    double mean_episode_length = 0.0;
    /// Mean TD loss since the previous row; NaN before learning starts.
    double loss = 0.0;
    double epsilon = 0.0;
};

struct EpisodeRecord {
    /// Global step count when the episode's last transition was consumed.
    std::uint64_t step = 0;
    EpisodeSummary summary;
};

struct TrainReport {
    std::uint64_t steps = 0;
    std::uint64_t episodes = 0;
    std::uint64_t faults = 0;
    bool stopped_early = false;
    std::vector<EpisodeRecord> episode_log;
};

inline constexpr const char* train_log_header = "wall_ms,steps,episodes,mean_ep_reward,mean_ep_len,loss,epsilon";

/// DQN learner fed by a CollectorPool.
class Trainer {
public:
    /// `env_config` is a whole configuration document (see scenarios::make_environment).
    Trainer(nlohmann::json env_config, TrainerConfig config);

    /// Continues from a checkpoint: parameters and step count are restored.
    /// Throws CorruptCheckpoint when its spaces differ from the scenario's.
    void resume(const Checkpoint& checkpoint);

    /// Collects until total_steps transitions have been consumed (counting
    /// resumed steps). `on_progress` runs at every log row; returning false
    /// stops training early. Rows are also written to `log` when given.
    TrainReport run(std::ostream* log = nullptr,
                    const std::function<bool(const Progress&, const Trainer&)>& on_progress = {});

    Checkpoint checkpoint() const;
    const QNetwork& network() const noexcept { return dqn_.online(); }
    const env::SpaceDescriptor& spaces() const noexcept { return spaces_; }
    const ActionMapper& actions() const noexcept { return mapper_; }
    const TrainerConfig& config() const noexcept { return config_; }
    std::uint64_t steps() const noexcept { return steps_; }

private:
    nlohmann::json env_config_;
    TrainerConfig config_;
    std::string scenario_;
    env::SpaceDescriptor spaces_;
    ActionMapper mapper_;
    Dqn dqn_;
    std::uint64_t steps_ = 0;
};

struct EpisodeReport {
    std::uint64_t seed = 0;
    double reward = 0.0;
    std::uint64_t length = 0;
    std::map<std::string, double> metrics;
};

/// Runs one greedy (epsilon = 0) episode per seed. File outputs named in
/// `env_config` are honoured.
std::vector<EpisodeReport> evaluate(const QNetwork& policy, const ActionMapper& actions,
                                    const nlohmann::json& env_config, const std::vector<std::uint64_t>& seeds);

/// Runs one episode per seed choosing actions with `policy(agent, observation)`.
std::vector<EpisodeReport> evaluate_with(
    const std::function<env::ActionValue(const env::AgentId&, const env::Observation&)>& policy,
    const nlohmann::json& env_config, const std::vector<std::uint64_t>& seeds);

} // namespace stepnet::trainer
