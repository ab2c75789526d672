#include "stepnet/cc/cc_agent.hpp"
#include "stepnet/errors.hpp"
#include "stepnet/scenarios/registry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stepnet;
using namespace stepnet::cc;

TEST(ApplyAlpha, WindowExamples) {
    EXPECT_DOUBLE_EQ(apply_alpha(100, 1, 65536), 200);
    EXPECT_DOUBLE_EQ(apply_alpha(100, 2, 65536), 400);
    EXPECT_DOUBLE_EQ(apply_alpha(100, -2, 65536), 25);
    EXPECT_DOUBLE_EQ(apply_alpha(100, 0, 65536), 100);
}

TEST(ApplyAlpha, ClampsAndRejects) {
    EXPECT_DOUBLE_EQ(apply_alpha(1, -2, 65536), 1);
    EXPECT_DOUBLE_EQ(apply_alpha(40000, 2, 65536), 65536);
    EXPECT_THROW(apply_alpha(100, 2.0001, 65536), OutOfRange);
    EXPECT_THROW(apply_alpha(100, -3, 65536), OutOfRange);
    EXPECT_THROW(apply_alpha(100, std::nan(""), 65536), OutOfRange);
}

TEST(ApplyAlpha, RatioWithinQuarterAndFour) {
    for (double alpha = -2; alpha <= 2; alpha += 0.125) {
        for (double w : {1.0, 3.0, 17.5, 1000.0}) {
            const double r = apply_alpha(w, alpha, 1e12) / w;
            EXPECT_GE(r, 0.25 - 1e-15);
            EXPECT_LE(r, 4 + 1e-12);
        }
    }
}

TEST(NormalisedDelay, Endpoints) {
    EXPECT_EQ(normalised_delay(30, 30, 90), 0.0);
    EXPECT_EQ(normalised_delay(90, 30, 90), 1.0);
    EXPECT_EQ(normalised_delay(60, 30, 90), 0.5);
    EXPECT_EQ(normalised_delay(30, 30, 30), 0.0);
    EXPECT_EQ(normalised_delay(100, 30, 90), 1.0);
}

TEST(Reward, HandEvaluatedExamples) {
    // Full rate, no loss, no delay variation: the else branch gives 1*1*(1-0).
    EXPECT_DOUBLE_EQ(reward_of(1.0, 0.0, 35, 35, 35), 1.0);
    // d = d_min with headroom: first branch, 0.8 - 0.1.
    EXPECT_DOUBLE_EQ(reward_of(0.8, 0.1, 35, 35, 70), 0.7);
    // d = 2 d_min at the middle of [d_min, d_max]: 1 * 0.5 * 0.5.
    EXPECT_DOUBLE_EQ(reward_of(1.0, 0.0, 70, 35, 105), 0.25);
    EXPECT_LT(reward_of(0.0, 1.0, 35, 35, 70), 0.0);
    EXPECT_LT(reward_of(0.0, 1.0, 50, 35, 70), 0.0);
}

TEST(Reward, BranchesAgreeWhenDelayIsMinimal) {
    for (double ratio = 0; ratio <= 1.0; ratio += 0.05) {
        for (double loss = 0; loss <= 1.0; loss += 0.05) {
            const double base = ratio - loss;
            EXPECT_NEAR(reward_of(ratio, loss, 40, 40, 80), base, 1e-15);
        }
    }
}

TEST(Reward, NonIncreasingInLossAndDelay) {
    const double d_min = 20;
    for (int r = 0; r <= 20; ++r) {
        for (int m = 0; m <= 20; ++m) {
            const double ratio = r * 0.05;
            const double d_max = d_min * (1 + m * 0.15);
            double prev_l = INFINITY;
            for (int l = 0; l <= 20; ++l) {
                const double v = reward_of(ratio, l * 0.05, d_min * 1.2, d_min, d_max);
                EXPECT_LE(v, prev_l + 1e-12);
                prev_l = v;
            }
            // With ratio - L >= 0, larger delay never helps.
            double prev_d = INFINITY;
            for (int k = 0; k <= 20; ++k) {
                const double d = d_min + (d_max - d_min) * k / 20.0;
                const double v = reward_of(ratio, 0.0, d, d_min, d_max);
                EXPECT_LE(v, prev_d + 1e-12);
                prev_d = v;
            }
        }
    }
}

TEST(Observation, BoundsAndRatio) {
    net::FlowStats s;
    s.has_rtt = true;
    s.throughput_bps = 60e6;
    s.max_throughput_bps = 120e6;
    s.srtt = des::SimTime{50'000'000};
    s.min_rtt = des::SimTime{40'000'000};
    s.max_rtt = des::SimTime{60'000'000};
    s.loss_ratio = 0.02;
    const auto o = compute_observation(s, 256, 65536);
    ASSERT_EQ(o.size(), 4u);
    EXPECT_DOUBLE_EQ(o[0], 0.5);
    EXPECT_DOUBLE_EQ(o[1], 0.5);
    EXPECT_DOUBLE_EQ(o[2], 0.02);
    EXPECT_DOUBLE_EQ(o[3], 0.5);

    // Estimator noise beyond the range is clamped.
    s.throughput_bps = 130e6;
    s.srtt = des::SimTime{70'000'000};
    s.loss_ratio = 1.5;
    for (double v : compute_observation(s, 1e9, 65536)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(AgentConfig, ParsesAndRejects) {
    const auto c = AgentConfig::from_json({{"loss_done_threshold", 0.3}, {"max_steps", 50}});
    EXPECT_EQ(c.loss_done_threshold, 0.3);
    EXPECT_EQ(c.max_steps, 50u);
    EXPECT_EQ(c.step_rtt_multiplier, 2.0);
    EXPECT_THROW(AgentConfig::from_json({{"loss_done_threshold", 1.5}}), ConfigError);
    EXPECT_THROW(AgentConfig::from_json({{"max_steps", 0}}), ConfigError);
    EXPECT_THROW(AgentConfig::from_json({{"cwnd_cap_pkts", 0.5}}), ConfigError);
}

namespace {

DumbbellScenario& scenario_of(env::Environment& e) { return *dynamic_cast<DumbbellScenario*>(e.scenario()); }

env::Environment dumbbell(nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json c = {{"scenario", "dumbbell"},
                        {"dumbbell", {{"bandwidth_mbps", 50}, {"rtt_ms", 20}, {"buffer_pkts", 100}}},
                        {"agent", {{"ssthresh_pkts", 1e6}}}};
    c.merge_patch(extra);
    return scenarios::make_environment(c);
}

} // namespace

TEST(CcAgent, StepDurationIsTwiceWindowedMinimumRtt) {
    auto env = dumbbell({{"agent", {{"max_steps", 60}}}});
    env.reset(1);
    auto& sender = scenario_of(env).network().sender(0);
    auto& agent = scenario_of(env).agent(0);
    int step = 0;
    while (!env.episode_done()) {
        const auto t0 = env.now();
        const auto expected = sender.stats().windowed_min_rtt(t0) * 2;
        const double alpha = (step++ % 3 == 0) ? 0.3 : -0.2;
        env.step({{"flow1", env::continuous(alpha)}});
        if (env.episode_done()) {
            break;
        }
        EXPECT_EQ(agent.last_step_duration(), expected);
        EXPECT_EQ(env.now() - t0, expected);
    }
    EXPECT_EQ(agent.done_reason(), DoneReason::MaxSteps);
    EXPECT_EQ(agent.steps(), 60u);
}

TEST(CcAgent, ObservationsStayInUnitBox) {
    auto env = dumbbell({{"agent", {{"max_steps", 100}}}});
    env.reset(2);
    int i = 0;
    while (!env.episode_done()) {
        const auto r = env.step({{"flow1", env::continuous(i++ % 2 ? 2.0 : -1.0)}});
        for (double v : r.observations.at("flow1")) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
        ASSERT_LE(r.rewards.at("flow1"), 1.0);
    }
}

TEST(CcAgent, AggressiveWindowEndsOnLoss) {
    auto env = dumbbell({{"agent", {{"loss_done_threshold", 0.2}}}});
    env.reset(3);
    while (!env.episode_done()) {
        env.step({{"flow1", env::continuous(2.0)}});
    }
    EXPECT_EQ(scenario_of(env).agent(0).done_reason(), DoneReason::Loss);
}

TEST(CcAgent, FinishedFlowEndsCompleted) {
    auto env = dumbbell({{"dumbbell", {{"flows", {{{"start_s", 0}, {"size_pkts", 3000}}}}}}});
    env.reset(4);
    while (!env.episode_done()) {
        env.step({{"flow1", env::continuous(0.0)}});
    }
    EXPECT_EQ(scenario_of(env).agent(0).done_reason(), DoneReason::Completed);
    EXPECT_TRUE(scenario_of(env).network().sender(0).completed());
}

TEST(CcAgent, RejectsWrongActionShape) {
    auto env = dumbbell();
    env.reset(5);
    EXPECT_THROW(env.step({{"flow1", env::discrete(1)}}), InvalidAction);
    EXPECT_THROW(env.step({{"flow1", env::continuous(3.0)}}), InvalidAction);
}

TEST(CcAgent, EpisodeMetricsAreSane) {
    auto env = dumbbell({{"agent", {{"max_steps", 50}}}});
    env.reset(6);
    while (!env.episode_done()) {
        env.step({{"flow1", env::continuous(0.0)}});
    }
    const auto m = env.scenario()->metrics();
    ASSERT_TRUE(m.contains("norm_throughput"));
    EXPECT_GT(m.at("norm_throughput"), 0.0);
    EXPECT_LE(m.at("norm_throughput"), 1.01);
    EXPECT_GE(m.at("loss_rate"), 0.0);
    EXPECT_GE(m.at("mean_queue_delay_ms"), 0.0);
}
