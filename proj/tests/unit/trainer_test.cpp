#include "stepnet/cc/cc_agent.hpp"
#include "stepnet/errors.hpp"
#include "stepnet/scenarios/registry.hpp"
#include "stepnet/trainer/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace stepnet;
using namespace stepnet::trainer;

namespace {

Transition make_transition(double tag, std::uint64_t action = 0, double reward = 0.0, bool done = false) {
    Transition t;
    t.observation = {tag};
    t.action = action;
    t.reward = reward;
    t.next_observation = {tag + 1};
    t.done = done;
    t.agent = "a";
    return t;
}

TrainerConfig small_config() {
    TrainerConfig c;
    c.hidden = {16};
    c.total_steps = 2000;
    c.warmup_steps = 200;
    c.batch_size = 16;
    c.log_interval = 500;
    c.seed = 4;
    return c;
}

const nlohmann::json cartpole = {{"scenario", "cartpole"}};

} // namespace

TEST(ReplayBuffer, FifoEvictionAtCapacity) {
    ReplayBuffer b(5);
    for (int i = 0; i < 12; ++i) {
        b.push(make_transition(i));
        ASSERT_LE(b.size(), 5u);
    }
    EXPECT_EQ(b.pushed(), 12u);
    std::set<double> present;
    for (std::size_t i = 0; i < b.size(); ++i) {
        present.insert(b[i].observation[0]);
    }
    EXPECT_EQ(present, (std::set<double>{7, 8, 9, 10, 11}));
}

TEST(ReplayBuffer, SamplesUniformlyOverContents) {
    ReplayBuffer b(4);
    for (int i = 0; i < 4; ++i) {
        b.push(make_transition(i));
    }
    des::RngStream rng("s", 1);
    std::vector<int> counts(4);
    const int n = 40000;
    for (auto i : b.sample_indices(n, rng)) {
        ASSERT_LT(i, 4u);
        ++counts[i];
    }
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    for (int c : counts) {
        EXPECT_LE(std::abs(c - n / 4.0), 4 * sigma);
    }
}

TEST(QNetwork, GradientMatchesCentralDifferences) {
    QNetwork net({1, 3, 1});
    ASSERT_EQ(net.parameter_count(), 10u);
    des::RngStream rng("init", 3);
    net.initialise(rng);
    Eigen::MatrixXd x(1, 6);
    x << -1.3, -0.4, 0.2, 0.7, 1.1, 2.0;
    const std::vector<std::uint64_t> a(6, 0);
    Eigen::VectorXd y(6);
    y << 0.5, -0.2, 1.0, 0.3, -0.7, 0.9;

    std::vector<double> grad;
    net.td_loss(x, a, y, &grad);
    const auto p0 = net.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        const double h = 1e-6;
        auto p = p0;
        p[i] = p0[i] + h;
        net.set_parameters(p);
        const double up = net.td_loss(x, a, y, nullptr);
        p[i] = p0[i] - h;
        net.set_parameters(p);
        const double down = net.td_loss(x, a, y, nullptr);
        const double fd = (up - down) / (2 * h);
        const double rel = std::abs(fd - grad[i]) / std::max(1e-8, std::max(std::abs(fd), std::abs(grad[i])));
        worst = std::max(worst, rel);
    }
    net.set_parameters(p0);
    EXPECT_LT(worst, 1e-4);
}

TEST(QNetwork, ParameterRoundTrip) {
    QNetwork a({4, 8, 8, 2});
    des::RngStream rng("init", 5);
    a.initialise(rng);
    QNetwork b({4, 8, 8, 2});
    b.set_parameters(a.parameters());
    const env::Observation o{0.1, -0.2, 0.3, 0.4};
    EXPECT_EQ(a.q_values(o), b.q_values(o));
    EXPECT_THROW(b.set_parameters({1.0, 2.0}), Error);
}

TEST(Act, GreedyAndTies) {
    Eigen::VectorXd q(3);
    q << 1, 3, 2;
    EXPECT_EQ(greedy(q), 1u);
    q << 2, 2, 0;
    EXPECT_EQ(greedy(q), 0u);
}

TEST(Act, FullExplorationIsUniform) {
    QNetwork net({2, 4, 3});
    des::RngStream init("init", 1);
    net.initialise(init);
    des::RngStream rng("act", 2);
    const int n = 10000;
    std::vector<int> counts(3);
    for (int i = 0; i < n; ++i) {
        ++counts.at(act(net, {0.3, -0.1}, 1.0, rng));
    }
    const double p = 1.0 / 3.0;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (int c : counts) {
        EXPECT_LE(std::abs(c - n * p), 3 * sigma);
    }
}

TEST(Act, ZeroEpsilonIsGreedy) {
    QNetwork net({2, 4, 3});
    des::RngStream init("init", 1);
    net.initialise(init);
    des::RngStream rng("act", 2);
    const env::Observation o{0.3, -0.1};
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(act(net, o, 0.0, rng), greedy(net.q_values(o)));
    }
}

TEST(Discretise, GridExamples) {
    const env::Bounds alpha{-2, 2};
    EXPECT_DOUBLE_EQ(discretise_action(5, alpha, 11), 0.0);
    EXPECT_DOUBLE_EQ(discretise_action(0, alpha, 11), -2.0);
    EXPECT_DOUBLE_EQ(discretise_action(10, alpha, 11), 2.0);
    EXPECT_DOUBLE_EQ(discretise_action(1, alpha, 5), -1.0);
    EXPECT_THROW(discretise_action(11, alpha, 11), IndexOutOfRange);
    EXPECT_THROW(discretise_action(0, alpha, 1), IndexOutOfRange);
}

TEST(Discretise, ActionMapper) {
    ActionMapper box(env::BoxSpace{{env::Bounds{-2, 2}}}, 11);
    EXPECT_EQ(box.size(), 11u);
    EXPECT_EQ(box.to_action(8), env::continuous(discretise_action(8, {-2, 2}, 11)));
    ActionMapper two(env::BoxSpace{{env::Bounds{0, 1}, env::Bounds{0, 10}}}, 3);
    EXPECT_EQ(two.size(), 9u);
    // First dimension fastest.
    EXPECT_EQ(two.to_action(5), env::continuous(std::vector<double>{1.0, 5.0}));
    ActionMapper disc(env::DiscreteSpace{2}, 11);
    EXPECT_EQ(disc.size(), 2u);
    EXPECT_EQ(disc.to_action(1), env::discrete(1));
}

TEST(TrainerConfig, ValidationAndSchedule) {
    EXPECT_THROW(TrainerConfig::from_json({{"gamma", 1.5}}), ConfigError);
    EXPECT_THROW(TrainerConfig::from_json({{"action_bins", 1}}), ConfigError);
    EXPECT_THROW(TrainerConfig::from_json({{"workers", 0}}), ConfigError);
    EXPECT_THROW(TrainerConfig::from_json({{"optimizer", "rmsprop"}}), ConfigError);
    EXPECT_THROW(TrainerConfig::from_json({{"no_such_key", 1}}), ConfigError);

    const TrainerConfig c;
    EXPECT_DOUBLE_EQ(c.epsilon(0), 1.0);
    EXPECT_DOUBLE_EQ(c.epsilon(5000), 0.525);
    EXPECT_DOUBLE_EQ(c.epsilon(10000), 0.05);
    EXPECT_DOUBLE_EQ(c.epsilon(1'000'000), 0.05);

    const auto round = TrainerConfig::from_json(c.to_json());
    EXPECT_EQ(round.to_json(), c.to_json());
}

TEST(Dqn, DoneMasksBootstrap) {
    TrainerConfig c;
    c.gamma = 0.9;
    Dqn dqn({1, 4, 2}, c);
    const auto done = make_transition(0.5, 0, 1.25, true);
    EXPECT_EQ(dqn.target_of(done), 1.25);
    const auto live = make_transition(0.5, 0, 1.25, false);
    const auto q = dqn.target().q_values(live.next_observation);
    EXPECT_DOUBLE_EQ(dqn.target_of(live), 1.25 + 0.9 * q.maxCoeff());
}

TEST(Dqn, ZeroRewardsDriveLossToZero) {
    TrainerConfig c;
    c.gamma = 0.9;
    c.batch_size = 32;
    c.target_sync = 50;
    c.learning_rate = 1e-2;
    Dqn dqn({2, 16, 3}, c);
    ReplayBuffer b(512);
    des::RngStream rng("data", 9);
    for (int i = 0; i < 512; ++i) {
        Transition t;
        t.observation = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        t.next_observation = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        t.action = rng.below(3);
        t.done = rng.below(4) == 0;
        b.push(t);
    }
    des::RngStream draw("batch", 1);
    const double first = dqn.train_step(b, draw);
    // Mean loss over consecutive windows keeps falling toward the fixed point Q = 0.
    std::vector<double> windows;
    for (int w = 0; w < 4; ++w) {
        double sum = 0.0;
        for (int i = 0; i < 2000; ++i) {
            sum += dqn.train_step(b, draw);
        }
        windows.push_back(sum / 2000);
    }
    for (std::size_t w = 1; w < windows.size(); ++w) {
        EXPECT_LT(windows[w], windows[w - 1]);
    }
    EXPECT_LT(windows.back(), first * 1e-3);
}

TEST(Checkpoint, RoundTripIsByteIdenticalAndActsTheSame) {
    Trainer t(cartpole, small_config());
    t.run();
    const Checkpoint c = t.checkpoint();
    const std::string text = serialise(c);
    EXPECT_EQ(serialise(parse_checkpoint(text)), text);

    const auto path = (std::filesystem::path(::testing::TempDir()) / "ckpt.json").string();
    save_checkpoint(path, c);
    const Checkpoint loaded = load_checkpoint(path, t.spaces());
    EXPECT_EQ(serialise(loaded), text);
    EXPECT_EQ(loaded.steps, 2000u);

    const QNetwork net = network_of(loaded);
    des::RngStream probe("probe", 77);
    for (int i = 0; i < 100; ++i) {
        const env::Observation o{probe.uniform(-2.4, 2.4), probe.uniform(-3, 3), probe.uniform(-0.2, 0.2),
                                 probe.uniform(-3, 3)};
        ASSERT_EQ(greedy(net.q_values(o)), greedy(t.network().q_values(o)));
    }
}

TEST(Checkpoint, RejectsCorruptAndMismatched) {
    Trainer t(cartpole, small_config());
    const auto path = (std::filesystem::path(::testing::TempDir()) / "ckpt2.json").string();
    save_checkpoint(path, t.checkpoint());

    EXPECT_THROW(load_checkpoint(path, cc::spaces()), CorruptCheckpoint);
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), CorruptCheckpoint);
    EXPECT_THROW(parse_checkpoint("{not json"), CorruptCheckpoint);

    auto j = nlohmann::json::parse(serialise(t.checkpoint()));
    j["version"] = 99;
    EXPECT_THROW(parse_checkpoint(j.dump()), CorruptCheckpoint);
    j = nlohmann::json::parse(serialise(t.checkpoint()));
    j["params"].erase(0);
    EXPECT_THROW(parse_checkpoint(j.dump()), CorruptCheckpoint);
    j = nlohmann::json::parse(serialise(t.checkpoint()));
    j["config"]["gamma"] = 0.5;
    EXPECT_THROW(parse_checkpoint(j.dump()), CorruptCheckpoint);
}

TEST(Checkpoint, ResumeContinuesStepCounter) {
    auto cfg = small_config();
    Trainer first(cartpole, cfg);
    first.run();
    cfg.total_steps = 3000;
    Trainer second(cartpole, cfg);
    second.resume(first.checkpoint());
    EXPECT_EQ(second.steps(), 2000u);
    const auto report = second.run();
    EXPECT_EQ(report.steps, 3000u);
    EXPECT_EQ(second.checkpoint().steps, 3000u);
}

TEST(Collect, DeliversExactlyBudget) {
    Trainer t(cartpole, small_config());
    const auto params = t.network().parameters();
    for (std::size_t n : {1u, 3u}) {
        const auto per_worker = collect(cartpole, small_config(), params, 0.5, n, 100);
        std::size_t total = 0;
        for (const auto& w : per_worker) {
            total += w.size();
            // Within a worker, each transition continues from the previous one unless it ended an episode.
            for (std::size_t i = 1; i < w.size(); ++i) {
                if (!w[i - 1].done) {
                    EXPECT_EQ(w[i].observation, w[i - 1].next_observation);
                }
            }
        }
        EXPECT_EQ(total, 100u);
    }
}

TEST(Collect, PerWorkerTrajectoriesIgnoreInterleaving) {
    Trainer t(cartpole, small_config());
    const auto params = t.network().parameters();
    const auto one = collect(cartpole, small_config(), params, 0.3, 1, 800);
    const auto four = collect(cartpole, small_config(), params, 0.3, 4, 800);
    const auto again = collect(cartpole, small_config(), params, 0.3, 4, 800);
    auto same_prefix = [](const std::vector<Transition>& a, const std::vector<Transition>& b) {
        const std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].observation != b[i].observation || a[i].action != b[i].action || a[i].reward != b[i].reward ||
                a[i].done != b[i].done) {
                return false;
            }
        }
        return n > 0;
    };
    EXPECT_TRUE(same_prefix(one[0], four[0]));
    for (std::size_t w = 0; w < 4; ++w) {
        if (!four[w].empty() && !again[w].empty()) {
            EXPECT_TRUE(same_prefix(four[w], again[w])) << "worker " << w;
        }
    }
    EXPECT_NE(worker_seed(1, 0), worker_seed(1, 1));
}

TEST(Collect, CcEpisodesDrawParametersFromRanges) {
    const nlohmann::json cfg = {
        {"scenario", "dumbbell"},
        {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 10}}},
        {"dumbbell",
         {{"ranges",
           {{"bandwidth_mbps", {{"low", 64}, {"high", 128}}},
            {"rtt_ms", {{"low", 16}, {"high", 64}}},
            {"buffer_pkts", {{"low", 80}, {"high", 800}}}}}}}};
    TrainerConfig tc = small_config();
    tc.seed = 12;
    Trainer t(cfg, tc);
    PolicyBoard board;
    board.publish(t.network().parameters(), 1.0);
    CollectorPool pool(cfg, tc, 2, 300, board);
    int episodes = 0;
    std::set<double> bandwidths;
    while (auto item = pool.next()) {
        if (!item->episode) {
            continue;
        }
        ++episodes;
        const auto& m = item->episode->metrics;
        EXPECT_GE(m.at("bandwidth_mbps"), 64);
        EXPECT_LE(m.at("bandwidth_mbps"), 128);
        EXPECT_GE(m.at("rtt_ms"), 16);
        EXPECT_LE(m.at("rtt_ms"), 64);
        EXPECT_GE(m.at("buffer_pkts"), 80);
        EXPECT_LE(m.at("buffer_pkts"), 800);
        bandwidths.insert(m.at("bandwidth_mbps"));
    }
    EXPECT_GE(episodes, 20);
    EXPECT_EQ(bandwidths.size(), static_cast<std::size_t>(episodes));
}

TEST(Evaluate, ZeroEpisodesIsEmpty) {
    Trainer t(cartpole, small_config());
    EXPECT_TRUE(evaluate(t.network(), t.actions(), cartpole, {}).empty());
}

TEST(Evaluate, RandomCartpoleEpisodeLength) {
    des::RngStream rng("random", 5);
    std::vector<std::uint64_t> seeds(1000);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        seeds[i] = des::derive_seed(99, "ep" + std::to_string(i));
    }
    const auto reports =
        evaluate_with([&](const env::AgentId&, const env::Observation&) { return env::discrete(rng.below(2)); },
                      cartpole, seeds);
    double mean = 0.0;
    for (const auto& r : reports) {
        mean += static_cast<double>(r.length);
        EXPECT_EQ(r.reward, static_cast<double>(r.length));
    }
    mean /= static_cast<double>(reports.size());
    EXPECT_NEAR(mean, 20.0, 5.0);
}

TEST(Evaluate, WindowHeldNearBdpFillsTheLink) {
    // 100 Mbps, 35 ms: BDP is 291.7 packets. The cwnd feature is
    // log2(cwnd)/log2(cap), so the policy can read its own window back.
    const nlohmann::json cfg = {{"scenario", "dumbbell"},
                                {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 200}}},
                                {"dumbbell", {{"bandwidth_mbps", 100}, {"rtt_ms", 35}, {"buffer_pkts", 440}}}};
    const double target = 320.0;
    const auto reports = evaluate_with(
        [&](const env::AgentId&, const env::Observation& o) {
            const double cwnd = std::exp2(o[3] * 16.0);
            return env::continuous(std::clamp(std::log2(target / cwnd), -2.0, 2.0));
        },
        cfg, {1, 2});
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& r : reports) {
        EXPECT_GE(r.metrics.at("norm_throughput"), 0.99);
        EXPECT_LE(r.metrics.at("loss_rate"), 0.01);
    }
}
