#pragma once

#include <memory>
#include <optional>
#include <string>

#include "tcco/agent.hpp"
#include "tcco/env.hpp"
#include "tcco/metrics.hpp"
#include "tcco/scenario.hpp"

namespace tcco {

struct RunOptions {
    std::uint64_t seed = 1;
    std::string checkpoint;      // agent algorithms load parameters from here
    DtqnAgent* agent = nullptr;  // in-memory agent takes precedence
    std::optional<double> duration_s;
    std::optional<double> decision_interval_s;
    std::optional<double> control_delay_s;
    std::optional<double> loss_rate;            // override every path
    std::optional<std::int64_t> queue_packets;  // override every path
    std::string engine_addr;  // "host:port" = serve decisions out of process
};

struct RunResult {
    MetricLog log;
    Summary summary;
    double duration_s = 0.0;
    std::map<std::string, double> fct_s;  // keyed by flow size in bytes
};

// Deterministic per (scenario, seed). Summary statistics are always
// recomputed from the serialized CSV text so they match a later reparse
// bit for bit.
RunResult run_scenario(const Scenario& scenario, const RunOptions& opt);

// Applies run-option overrides to a copy of the scenario.
Scenario apply_overrides(Scenario s, const RunOptions& opt);

// Builds the environment for a scenario (shared by runner and trainer).
std::unique_ptr<PomdpEnv> make_env(const Scenario& s, int horizon_steps);

// Builds the agent configuration implied by a scenario.
AgentConfig agent_config_for(const Scenario& s);

// Convenience: mean utilization and RTT inflation of an eval run.
struct EvalStats {
    double utilization = 0.0;   // aggregate goodput / scheduled capacity
    double rtt_ratio = 0.0;     // mean RTT / base RTT
    double goodput_bps = 0.0;
};
EvalStats eval_stats(const Scenario& s, const RunResult& run);

// Out-of-process decision engine: serves NDJSON metric batches with
// directive lines over a connected stream socket (one session per fd).
void engine_serve_fd(int fd, DtqnAgent& agent, const RewardConfig& bounds);

// Listens on 127.0.0.1:port and serves sessions until the process dies.
[[noreturn]] void engine_serve(int port, DtqnAgent& agent, const RewardConfig& bounds);

}  // namespace tcco
