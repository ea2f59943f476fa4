#pragma once

#include <memory>
#include <string>

#include "tcco/runner.hpp"

namespace tcco {

struct TrainOptions {
    std::uint64_t seed = 1;
    std::int64_t env_steps = 60'000;
    int train_every = 8;
    std::string checkpoint_out;
    std::string metrics_out;
    std::string init_checkpoint;  // warm-start parameters (optional)

    // Periodic greedy evaluation with optional early stop once both
    // targets hold (0 disables a target).
    std::int64_t eval_every = 0;  // env steps between evals; 0 = off
    double eval_duration_s = 15.0;
    double target_utilization = 0.0;
    double target_rtt_ratio = 0.0;
    double wall_clock_limit_s = 0.0;
    bool verbose = false;
};

struct TrainResult {
    std::int64_t env_steps = 0;
    std::int64_t train_steps = 0;
    bool target_met = false;
    EvalStats final_eval;
    MetricLog log;
    std::unique_ptr<DtqnAgent> agent;
};

// Online training against the scenario's environment: epsilon-greedy
// acting, replay, one gradient step every `train_every` environment
// steps, episodic resets at the scenario horizon.
TrainResult train_agent(const Scenario& scenario, const TrainOptions& opt);

// Greedy evaluation of an agent on a scenario.
EvalStats evaluate_agent(const Scenario& scenario, DtqnAgent& agent, std::uint64_t seed,
                         double duration_s);

}  // namespace tcco
