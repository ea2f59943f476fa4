#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tcco/runner.hpp"
#include "tcco/scenario.hpp"

using namespace tcco;

namespace {

Scenario small_scenario() {
    Scenario s;
    s.name = "env_t";
    s.duration_s = 10.0;
    s.decision_interval_s = 0.02;
    s.algorithm = CcAlgorithm::kTcco;
    PathSpec p;
    p.capacity_schedule = {{0, 20e6}};
    p.prop_delay = 4'000'000;
    p.queue_packets = 100;
    s.paths = {p, p};
    s.episode_horizon_steps = 16;
    return s;
}

}  // namespace

TEST_CASE("reset produces a full-width observation after handoff") {
    auto env = make_env(small_scenario(), 16);
    const Observation& obs = env->reset(5);
    REQUIRE(obs.subflows.size() == 2);
    CHECK(env->connection().all_handed_off());
    CHECK(obs.subflows[0].cwnd >= 16.0);  // start threshold reached
    CHECK(obs.subflows[0].base_rtt_s > 0.0);
    CHECK(obs.flatten().size() == 12);
    CHECK(env->context().valid() == 1);
}

TEST_CASE("step applies directives, advances one window, rewards") {
    auto env = make_env(small_scenario(), 16);
    env->reset(6);
    const double cwnd0 = env->observation().subflows[0].cwnd;
    ActionSpace as;
    as.subflows = 2;
    // Max joint increase: both deltas +2 (k=2 packets each).
    const int up = as.encode({2, 2});
    auto res = env->step(up);
    CHECK(res.components.size() == 2);
    CHECK_FALSE(res.done);
    // After a full window the ramp (+1/ACK) reaches the +4 target.
    auto res2 = env->step(as.encode({0, 0}));
    CHECK(res2.obs.subflows[0].cwnd == doctest::Approx(cwnd0 + 4).epsilon(0.1));
}

TEST_CASE("pushing below cwnd_min clamps and earns the boundary penalty") {
    Scenario s = small_scenario();
    auto env = make_env(s, 16);
    env->reset(7);
    ActionSpace as;
    as.subflows = 2;
    const int down = as.encode({-2, -2});
    // Walk down to the floor.
    PomdpEnv::StepResult res;
    for (int i = 0; i < 12; ++i) res = env->step(down);
    CHECK(res.obs.subflows[0].cwnd == doctest::Approx(2.0));  // cwnd_min
    CHECK(res.components[0].boundary == BoundaryOverride::kMinusOne);
    CHECK(res.components[0].reward == -1.0);
    CHECK(res.reward == doctest::Approx(-2.0));  // both subflows pinned
}

TEST_CASE("zero action on a stationary link keeps the observation stationary") {
    auto env = make_env(small_scenario(), 64);
    env->reset(8);
    ActionSpace as;
    as.subflows = 2;
    const int hold = as.encode({0, 0});
    // Let the pipeline settle, then compare consecutive windows.
    for (int i = 0; i < 6; ++i) env->step(hold);
    const auto a = env->step(hold).obs;
    const auto b = env->step(hold).obs;
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.subflows[i].cwnd == b.subflows[i].cwnd);
        CHECK(a.subflows[i].tput_smoothed_bps ==
              doctest::Approx(b.subflows[i].tput_smoothed_bps).epsilon(0.2));
        CHECK(a.subflows[i].rtt_smoothed_s ==
              doctest::Approx(b.subflows[i].rtt_smoothed_s).epsilon(0.2));
    }
}

TEST_CASE("episode terminates exactly at the horizon") {
    auto env = make_env(small_scenario(), 5);
    env->reset(9);
    ActionSpace as;
    as.subflows = 2;
    const int hold = as.encode({0, 0});
    for (int i = 0; i < 4; ++i) CHECK_FALSE(env->step(hold).done);
    CHECK(env->step(hold).done);
}

TEST_CASE("context window keeps the last L observations") {
    Scenario s = small_scenario();
    s.agent.context_len = 4;
    auto env = make_env(s, 64);
    env->reset(10);
    ActionSpace as;
    as.subflows = 2;
    for (int i = 0; i < 10; ++i) env->step(as.encode({0, 0}));
    CHECK(env->context().valid() == 4);
    CHECK(env->context().length() == 4);
}

TEST_CASE("control delay shifts decision application, not the cadence") {
    Scenario s = small_scenario();
    s.control_delay_s = 0.005;
    auto env = make_env(s, 64);
    env->reset(11);
    ActionSpace as;
    as.subflows = 2;
    const double cwnd0 = env->observation().subflows[0].cwnd;
    env->step(as.encode({2, 2}));
    // One window later the ramp is under way or complete despite the
    // 10 ms round-trip control latency.
    const auto res = env->step(as.encode({0, 0}));
    CHECK(res.obs.subflows[0].cwnd > cwnd0);
    // Cadence unchanged: two steps advanced two windows (plus delay).
    CHECK(env->steps() == 2);
}
