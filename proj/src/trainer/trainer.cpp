#include "stepnet/trainer/trainer.hpp"

#include "stepnet/errors.hpp"
#include "stepnet/scenarios/registry.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace stepnet::trainer {

namespace {

env::SpaceDescriptor spaces_of(const nlohmann::json& env_config) {
    return scenarios::make_environment(worker_environment_config(env_config), 0).spaces();
}

void write_row(std::ostream& out, const Progress& p) {
    char line[512];
    std::snprintf(line, sizeof line, "%.17g,%llu,%llu,%.17g,%.17g,%.17g,%.17g\n", p.wall_ms,
                  static_cast<unsigned long long>(p.steps), static_cast<unsigned long long>(p.episodes),
                  p.mean_episode_reward, p.mean_episode_length, p.loss, p.epsilon);
    out << line;
}

} // namespace

Trainer::Trainer(nlohmann::json env_config, TrainerConfig config)
    : env_config_(std::move(env_config)),
      config_((config.validate(), std::move(config))),
      scenario_(env_config_.value("scenario", "")),
      spaces_(spaces_of(env_config_)),
      mapper_(spaces_.action, config_.action_bins),
      dqn_(network_layers(spaces_, config_), config_) {}

void Trainer::resume(const Checkpoint& checkpoint) {
    if (!(checkpoint.spaces == spaces_)) {
        throw CorruptCheckpoint("checkpoint spaces differ from the scenario's");
    }
    if (checkpoint.layers != dqn_.online().layers()) {
        throw CorruptCheckpoint("checkpoint network shape differs from the configured one");
    }
    dqn_.online().set_parameters(checkpoint.params);
    dqn_.sync_target();
    steps_ = checkpoint.steps;
}

Checkpoint Trainer::checkpoint() const {
    return Checkpoint{scenario_, spaces_, config_, dqn_.online().layers(), dqn_.online().parameters(), steps_};
}

TrainReport Trainer::run(std::ostream* log, const std::function<bool(const Progress&, const Trainer&)>& on_progress) {
    TrainReport report;
    if (steps_ >= config_.total_steps) {
        report.steps = steps_;
        return report;
    }
    const auto started = std::chrono::steady_clock::now();
    des::RngStream replay_rng("replay", des::derive_seed(config_.seed, "replay"));
    ReplayBuffer buffer(config_.buffer_capacity);
    PolicyBoard board;
    board.publish(dqn_.online().parameters(), config_.epsilon(steps_));
    CollectorPool pool(env_config_, config_, config_.workers, config_.total_steps - steps_, board);

    if (log != nullptr) {
        *log << "# stepnet train-log v1\n" << train_log_header << '\n';
    }
    double loss_sum = 0.0;
    std::uint64_t loss_n = 0;
    double reward_sum = 0.0;
    double length_sum = 0.0;
    std::uint64_t window_episodes = 0;
    std::uint64_t consumed = 0;
    const std::uint64_t learn_from = std::max<std::uint64_t>(config_.warmup_steps, config_.batch_size);

    while (auto item = pool.next()) {
        if (item->transition) {
            buffer.push(std::move(*item->transition));
            ++steps_;
            ++consumed;
            if (buffer.size() >= learn_from && consumed % config_.train_every == 0) {
                loss_sum += dqn_.train_step(buffer, replay_rng);
                ++loss_n;
            }
            if (consumed % config_.snapshot_interval == 0) {
                board.publish(dqn_.online().parameters(), config_.epsilon(steps_));
            }
        }
        if (item->episode) {
            ++report.episodes;
            ++window_episodes;
            reward_sum += item->episode->reward;
            length_sum += static_cast<double>(item->episode->length);
            report.episode_log.push_back(EpisodeRecord{steps_, std::move(*item->episode)});
        }
        if (item->transition && consumed % config_.log_interval == 0) {
            constexpr double nan = std::numeric_limits<double>::quiet_NaN();
            Progress p;
            p.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            p.steps = steps_;
            p.episodes = report.episodes;
            p.mean_episode_reward = window_episodes ? reward_sum / static_cast<double>(window_episodes) : nan;
            p.mean_episode_length = window_episodes ? length_sum / static_cast<double>(window_episodes) : nan;
            p.loss = loss_n ? loss_sum / static_cast<double>(loss_n) : nan;
            p.epsilon = config_.epsilon(steps_);
            if (log != nullptr) {
                write_row(*log, p);
            }
            spdlog::debug("steps={} episodes={} reward={:.3f} len={:.1f} loss={:.4g} eps={:.3f}", p.steps,
                          p.episodes, p.mean_episode_reward, p.mean_episode_length, p.loss, p.epsilon);
            loss_sum = reward_sum = length_sum = 0.0;
            loss_n = window_episodes = 0;
            if (on_progress && !on_progress(p, *this)) {
                report.stopped_early = true;
                pool.stop();
                break;
            }
        }
    }
    report.steps = steps_;
    report.faults = pool.faults();
    return report;
}

// ---------------------------------------------------------------------------

std::vector<EpisodeReport> evaluate_with(
    const std::function<env::ActionValue(const env::AgentId&, const env::Observation&)>& policy,
    const nlohmann::json& env_config, const std::vector<std::uint64_t>& seeds) {
    std::vector<EpisodeReport> out;
    if (seeds.empty()) {
        return out;
    }
    env::Environment environment = scenarios::make_environment(env_config);
    for (const auto seed : seeds) {
        EpisodeReport r;
        r.seed = seed;
        auto latest = environment.reset(seed);
        while (!environment.episode_done()) {
            std::map<env::AgentId, env::ActionValue> actions;
            for (const auto& id : environment.due_agents()) {
                actions.emplace(id, policy(id, latest.at(id)));
            }
            auto result = environment.step(actions);
            ++r.length;
            for (auto& [id, obs] : result.observations) {
                r.reward += result.rewards.at(id);
                latest[id] = std::move(obs);
            }
            if (result.fault) {
                r.metrics["fault"] = 1.0;
            }
        }
        auto metrics = environment.scenario()->metrics();
        r.metrics.insert(metrics.begin(), metrics.end());
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<EpisodeReport> evaluate(const QNetwork& policy, const ActionMapper& actions,
                                    const nlohmann::json& env_config, const std::vector<std::uint64_t>& seeds) {
    return evaluate_with(
        [&](const env::AgentId&, const env::Observation& obs) {
            return actions.to_action(greedy(policy.q_values(obs)));
        },
        env_config, seeds);
}

} // namespace stepnet::trainer
