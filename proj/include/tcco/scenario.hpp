#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcco/connection.hpp"
#include "tcco/env.hpp"
#include "tcco/path.hpp"
#include "tcco/reward.hpp"

namespace tcco {

struct PathSpec {
    std::vector<CapacityPoint> capacity_schedule;  // expanded, starts at 0
    TimeNs prop_delay = 0;
    std::vector<DelayPoint> delay_schedule;  // optional; single entry = constant
    std::int64_t queue_packets = 100;
    double loss_rate = 0.0;
};

struct CompetingSpec {
    CcAlgorithm algorithm = CcAlgorithm::kReno;
    std::vector<int> route;
    TimeNs start_at = 0;
};

struct AgentOverrides {
    std::optional<double> gamma;
    std::optional<double> lr_init;
    std::optional<int> context_len;
    std::optional<int> max_step;    // n
    std::optional<int> scale_pkts;  // k
    std::optional<bool> share_subflow_encoders;
};

struct Scenario {
    std::string name;
    double duration_s = 30.0;
    double decision_interval_s = 0.02;
    double control_delay_s = 0.0;
    CcAlgorithm algorithm = CcAlgorithm::kTcco;
    std::vector<PathSpec> paths;
    std::vector<std::vector<int>> subflow_routes;  // default: one subflow per path
    std::vector<CompetingSpec> competing;
    double app_rate_bps = 0.0;  // 0 = saturated
    std::vector<std::int64_t> flow_sizes_bytes;
    int seeds = 20;
    std::vector<double> fixed_cwnd;
    RewardConfig reward;
    bool reward_d_f_set = false;
    AgentOverrides agent;
    int episode_horizon_steps = 512;
    std::vector<double> loss_sweep;
    std::vector<std::int64_t> queue_sweep;

    // Runner-internal: single-flow size for the current FCT run; not a
    // config-file field.
    std::int64_t active_flow_size_bytes = 0;

    std::vector<std::vector<int>> routes() const;
    int subflow_count() const { return static_cast<int>(routes().size()); }
};

// Strict JSON loader: unknown fields, missing required fields and
// non-positive durations are errors that name the offending field.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<text>");
std::string emit_scenario(const Scenario& s);

// Ground-truth construction used by the harness and the env factory.
std::unique_ptr<SimBundle> build_sim(const Scenario& s, std::uint64_t seed,
                                     double cwnd_min, double cwnd_max);

// Aggregate scheduled capacity of the subflows' bottleneck hops,
// averaged over [t0, t1].
double mean_aggregate_capacity_bps(const Scenario& s, double t0_s, double t1_s);

// 4x BDP default bound from initial rates and base RTTs.
double default_cwnd_max(const Scenario& s);

}  // namespace tcco
