#include "stepnet/cli/commands.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stepnet::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::path(::testing::TempDir()) / ("stepnet_cli_" + std::string(info->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string write(const std::string& name, const nlohmann::json& j) {
        const auto path = (dir / name).string();
        std::ofstream(path) << j.dump(1);
        return path;
    }

    std::vector<std::string> lines(const std::string& name) const {
        std::ifstream in(dir / name);
        std::vector<std::string> out;
        for (std::string l; std::getline(in, l);) {
            out.push_back(l);
        }
        return out;
    }
};

const nlohmann::json tiny_trainer = {{"hidden", {8}},     {"warmup_steps", 100}, {"batch_size", 16},
                                     {"log_interval", 500}, {"total_steps", 1500}};

} // namespace

TEST_F(CliTest, MissingConfigExitsTwoAndNamesPath) {
    TrainArgs a;
    a.config = (dir / "nope.json").string();
    a.out = dir.string();
    std::ostringstream err;
    EXPECT_EQ(cmd_train(a, err), config_error);
    EXPECT_NE(err.str().find("nope.json"), std::string::npos);
}

TEST_F(CliTest, InvalidConfigExitsTwo) {
    TrainArgs a;
    a.config = write("bad.json", {{"scenario", "dumbbell"}, {"dumbbell", {{"bandwidth_mbps", -1}}}});
    a.out = dir.string();
    std::ostringstream err;
    EXPECT_EQ(cmd_train(a, err), config_error);
    EXPECT_NE(err.str().find("bandwidth_mbps"), std::string::npos);
}

TEST_F(CliTest, TrainWritesCheckpointLogAndEpisodes) {
    TrainArgs a;
    a.config = write("c.json", {{"scenario", "cartpole"}, {"trainer", tiny_trainer}});
    a.out = (dir / "out").string();
    std::ostringstream err;
    ASSERT_EQ(cmd_train(a, err), ok) << err.str();
    EXPECT_TRUE(fs::exists(dir / "out" / "checkpoint.json"));
    const auto log = lines("out/train_log.csv");
    ASSERT_EQ(log.size(), 2u + 3u);
    EXPECT_EQ(log[1], "wall_ms,steps,episodes,mean_ep_reward,mean_ep_len,loss,epsilon");
    const auto eps = lines("out/episodes.csv");
    ASSERT_GT(eps.size(), 2u);
    EXPECT_EQ(eps[1].rfind("step,worker,seed,ep_reward,ep_len", 0), 0u);
}

TEST_F(CliTest, TrainOnRangesLogsSampledParameters) {
    TrainArgs a;
    auto trainer = tiny_trainer;
    trainer["total_steps"] = 300;
    a.config = write("c.json", {{"scenario", "dumbbell"},
                                {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 20}}},
                                {"dumbbell",
                                 {{"ranges",
                                   {{"bandwidth_mbps", {{"low", 64}, {"high", 128}}},
                                    {"rtt_ms", {{"low", 16}, {"high", 64}}},
                                    {"buffer_pkts", {{"low", 80}, {"high", 800}}}}}}},
                                {"trainer", trainer}});
    a.out = dir.string();
    a.workers = 2;
    std::ostringstream err;
    ASSERT_EQ(cmd_train(a, err), ok) << err.str();
    const auto eps = lines("episodes.csv");
    ASSERT_GT(eps.size(), 3u);
    EXPECT_NE(eps[1].find("bandwidth_mbps"), std::string::npos);
    EXPECT_NE(eps[1].find("rtt_ms"), std::string::npos);
    EXPECT_NE(eps[1].find("buffer_pkts"), std::string::npos);
}

TEST_F(CliTest, EvalSweepCoversGridAndRejectsMismatch) {
    TrainArgs t;
    auto trainer = tiny_trainer;
    trainer["total_steps"] = 200;
    t.config = write("train.json", {{"scenario", "dumbbell"},
                                    {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 20}}},
                                    {"trainer", trainer}});
    t.out = dir.string();
    std::ostringstream err;
    ASSERT_EQ(cmd_train(t, err), ok) << err.str();

    EvalArgs e;
    e.config = write("eval.json", {{"scenario", "dumbbell"},
                                   {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 20}}},
                                   {"eval", {{"dimension", "bandwidth"}, {"values", {32, 96, 256}}, {"episodes", 2}}}});
    e.checkpoint = (dir / "checkpoint.json").string();
    e.out = dir.string();
    ASSERT_EQ(cmd_eval(e, err), ok) << err.str();
    const auto rows = lines("eval.csv");
    ASSERT_EQ(rows.size(), 2u + 6u);
    EXPECT_EQ(rows[1], "dimension,value,seed,norm_throughput,mean_queue_delay_ms,loss_rate,ep_reward,ep_len");
    std::multiset<std::string> values;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].rfind("bandwidth,", 0), 0u);
        values.insert(rows[i].substr(10, rows[i].find(',', 10) - 10));
    }
    EXPECT_EQ(values, (std::multiset<std::string>{"32", "32", "96", "96", "256", "256"}));

    EvalArgs wrong;
    wrong.config = write("cart.json", {{"scenario", "cartpole"}});
    wrong.checkpoint = e.checkpoint;
    wrong.out = dir.string();
    std::ostringstream err2;
    EXPECT_NE(cmd_eval(wrong, err2), ok);
    EXPECT_FALSE(err2.str().empty());
}

TEST_F(CliTest, EvalRejectsEmptyOrUnsortedGrid) {
    EvalArgs e;
    e.out = dir.string();
    e.checkpoint = (dir / "none.json").string();
    std::ostringstream err;
    e.config = write("a.json", {{"scenario", "dumbbell"}, {"eval", {{"dimension", "rtt"}, {"values", nlohmann::json::array()}}}});
    EXPECT_EQ(cmd_eval(e, err), config_error);
    e.config = write("b.json", {{"scenario", "dumbbell"}, {"eval", {{"dimension", "rtt"}, {"values", {40, 16}}}}});
    EXPECT_EQ(cmd_eval(e, err), config_error);
    e.config = write("c.json", {{"scenario", "dumbbell"}, {"eval", {{"dimension", "jitter"}}}});
    EXPECT_EQ(cmd_eval(e, err), config_error);
}

TEST_F(CliTest, BenchWritesOneRowPerWorkerCountAndSeed) {
    BenchArgs b;
    b.out = dir.string();
    b.steps = 300;
    b.worker_counts = {1, 2, 4};
    std::ostringstream err;
    ASSERT_EQ(cmd_bench(b, err), ok) << err.str();
    const auto rows = lines("bench.csv");
    ASSERT_EQ(rows.size(), 2u + 9u);
    EXPECT_EQ(rows[1], "workers,seed,wall_ms,steps_per_sec");

    b.steps = 0;
    EXPECT_EQ(cmd_bench(b, err), config_error);
}

TEST_F(CliTest, ReplayWritesTraceAndDetectsMismatch) {
    ReplayArgs r;
    r.config = write("c.json", {{"scenario", "cartpole"}});
    r.script = write("s.json", nlohmann::json::array({{{"cartpole", 1}}, {{"cartpole", 0}}, {{"*", 1}}}));
    r.out = dir.string();
    r.seed = 5;
    std::ostringstream err;
    ASSERT_EQ(cmd_replay(r, err), ok) << err.str();
    const auto rows = lines("trace.csv");
    ASSERT_EQ(rows.size(), 2u + 1u + 3u);
    EXPECT_EQ(rows[1], "step,agent_id,action,reward,obs_0,obs_1,obs_2,obs_3,done");
    EXPECT_EQ(rows[2].rfind("0,cartpole,,", 0), 0u);
    EXPECT_EQ(rows[3].rfind("1,cartpole,1,1,", 0), 0u);
    EXPECT_NE(err.str().find("truncated"), std::string::npos);

    r.script = write("bad.json", nlohmann::json::array({{{"ghost", 1}}}));
    EXPECT_EQ(cmd_replay(r, err), script_mismatch);
    r.script = write("bad2.json", nlohmann::json::array({{{"cartpole", 7}}}));
    EXPECT_NE(cmd_replay(r, err), ok);
}

TEST_F(CliTest, ReplayIsReproducible) {
    ReplayArgs r;
    r.config = write("c.json", {{"scenario", "dumbbell"}, {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 30}}}});
    nlohmann::json script = nlohmann::json::array();
    for (int i = 0; i < 30; ++i) {
        script.push_back({{"*", (i % 5) * 0.25 - 0.5}});
    }
    r.script = write("s.json", script);
    std::ostringstream err;
    r.out = (dir / "a").string();
    ASSERT_EQ(cmd_replay(r, err), ok) << err.str();
    r.out = (dir / "b").string();
    ASSERT_EQ(cmd_replay(r, err), ok) << err.str();
    EXPECT_EQ(lines("a/trace.csv"), lines("b/trace.csv"));
    EXPECT_EQ(lines("a/trace.csv").size(), 2u + 1u + 30u);
}

TEST_F(CliTest, TrainerSettingsDoNotTouchTheEnvironment) {
    nlohmann::json script = nlohmann::json::array();
    for (int i = 0; i < 40; ++i) {
        script.push_back({{"*", (i % 3) * 0.5 - 0.5}});
    }
    ReplayArgs r;
    r.script = write("s.json", script);
    std::ostringstream err;
    const nlohmann::json base = {{"scenario", "dumbbell"},
                                 {"event_trace", "events.log"},
                                 {"agent", {{"ssthresh_pkts", 1e6}, {"max_steps", 40}}}};
    auto a = base;
    a["trainer"] = {{"gamma", 0.5}, {"hidden", {8}}, {"learning_rate", 0.1}};
    auto b = base;
    b["trainer"] = {{"gamma", 0.99}, {"hidden", {64, 64}}, {"optimizer", "adam"}, {"batch_size", 128}};
    r.config = write("a.json", a);
    r.out = (dir / "a").string();
    ASSERT_EQ(cmd_replay(r, err), ok) << err.str();
    r.config = write("b.json", b);
    r.out = (dir / "b").string();
    ASSERT_EQ(cmd_replay(r, err), ok) << err.str();
    EXPECT_EQ(lines("a/trace.csv"), lines("b/trace.csv"));
    EXPECT_EQ(lines("a/events.log"), lines("b/events.log"));
    EXPECT_GT(lines("a/events.log").size(), 1000u);
}
