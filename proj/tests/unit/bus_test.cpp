#include "stepnet/bus/signal_bus.hpp"
#include "stepnet/errors.hpp"

#include <gtest/gtest.h>

using namespace stepnet;
using namespace stepnet::bus;

namespace {

Signal obs(const std::string& agent, double v) {
    return Signal{std::string(signals::obs_report), agent, ObservationPayload{agent, {v}}};
}

} // namespace

TEST(SignalBus, SingleSubscriberDeliveredOnce) {
    SignalBus bus;
    int n = 0;
    bus.subscribe(signals::obs_report, "broker", [&](const Signal&) { ++n; });
    EXPECT_EQ(bus.publish(obs("a", 1.0)), 1u);
    EXPECT_EQ(n, 1);
}

TEST(SignalBus, TwoSubscribersEachDeliveredOnce) {
    SignalBus bus;
    int a = 0, b = 0;
    bus.subscribe(signals::obs_report, "x", [&](const Signal&) { ++a; });
    bus.subscribe(signals::obs_report, "y", [&](const Signal&) { ++b; });
    EXPECT_EQ(bus.publish(obs("a", 1.0)), 2u);
    EXPECT_EQ(a, 1);
    EXPECT_EQ(b, 1);
}

TEST(SignalBus, NoReplayForLateSubscribers) {
    SignalBus bus;
    bus.publish(obs("a", 1.0));
    int n = 0;
    bus.subscribe(signals::obs_report, "late", [&](const Signal&) { ++n; });
    EXPECT_EQ(n, 0);
}

TEST(SignalBus, ZeroSubscribers) {
    SignalBus bus;
    EXPECT_EQ(bus.publish(obs("a", 1.0)), 0u);
}

TEST(SignalBus, PayloadMismatch) {
    SignalBus bus;
    Signal s{std::string(signals::action_broadcast), "env", ObservationPayload{"a", {1.0}}};
    EXPECT_THROW(bus.publish(s), PayloadMismatch);
    // User-defined types carry anything.
    EXPECT_NO_THROW(bus.publish(Signal{"MY_SIGNAL", "me", std::any(42)}));
}

TEST(SignalBus, UnsubscribeStopsDelivery) {
    SignalBus bus;
    int n = 0;
    const auto h = bus.subscribe(signals::obs_report, "x", [&](const Signal&) { ++n; });
    EXPECT_TRUE(bus.unsubscribe(h));
    EXPECT_FALSE(bus.unsubscribe(h));
    bus.publish(obs("a", 1.0));
    EXPECT_EQ(n, 0);
}

TEST(SignalBus, UnsubscribeAllSkipsDepartedAgent) {
    SignalBus bus;
    int n = 0;
    bus.subscribe(signals::action_broadcast, "agent-1", [&](const Signal&) { ++n; });
    bus.subscribe(signals::obs_report, "agent-1", [&](const Signal&) { ++n; });
    EXPECT_EQ(bus.unsubscribe_all("agent-1"), 2u);
    bus.publish(Signal{std::string(signals::action_broadcast), "env", ActionPayload{"agent-1", env::discrete(0)}});
    EXPECT_EQ(n, 0);
}

TEST(SignalBus, DeliveryOrderFollowsPublicationOrder) {
    SignalBus bus;
    std::vector<double> got;
    bus.subscribe(signals::obs_report, "x", [&](const Signal& s) {
        got.push_back(std::get<ObservationPayload>(s.payload).values[0]);
    });
    for (int i = 0; i < 10; ++i) {
        bus.publish(obs("a", i));
    }
    ASSERT_EQ(got.size(), 10u);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(got[i], i);
    }
}

TEST(SignalBus, StepRequestReachesStepperSynchronously) {
    SignalBus bus;
    des::SimTime requested;
    bus.subscribe(signals::step_request, "stepper", [&](const Signal& s) {
        requested = std::get<StepRequestPayload>(s.payload).duration;
    });
    bus.publish(Signal{std::string(signals::step_request), "flow1",
                       StepRequestPayload{"flow1", des::SimTime::milliseconds(70)}});
    EXPECT_EQ(requested, des::SimTime::milliseconds(70));
}

TEST(SignalBus, ReentrantPublishLimitedToMaxDepth) {
    SignalBus bus;
    int depth = 0;
    bus.subscribe("PING", "x", [&](const Signal& s) {
        ++depth;
        bus.publish(s);
    });
    EXPECT_THROW(bus.publish(Signal{"PING", "x", std::monostate{}}), SignalLoop);
    EXPECT_EQ(depth, SignalBus::max_depth);

    // Bounded re-entrance is fine.
    SignalBus bus2;
    int hops = 0;
    bus2.subscribe("HOP", "x", [&](const Signal& s) {
        if (++hops < 3) {
            bus2.publish(s);
        }
    });
    EXPECT_NO_THROW(bus2.publish(Signal{"HOP", "x", std::monostate{}}));
    EXPECT_EQ(hops, 3);
}
