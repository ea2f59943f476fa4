#include "tcco/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace tcco {

EvalStats evaluate_agent(const Scenario& scenario, DtqnAgent& agent, std::uint64_t seed,
                         double duration_s) {
    Scenario s = scenario;
    s.duration_s = duration_s;
    RunOptions opt;
    opt.seed = seed;
    opt.agent = &agent;
    const RunResult run = run_scenario(s, opt);
    return eval_stats(s, run);
}

TrainResult train_agent(const Scenario& scenario, const TrainOptions& opt) {
    TrainResult out;
    AgentConfig acfg = agent_config_for(scenario);
    acfg.planned_train_steps =
        std::max<std::int64_t>(1, opt.env_steps / std::max(1, opt.train_every));
    // Table-I sync cadence counts decision steps; with sparser gradient
    // steps the sync follows the same wall-clock rhythm.
    acfg.target_sync_every =
        std::max(1, 10000 / std::max(1, opt.train_every));
    out.agent = std::make_unique<DtqnAgent>(acfg, opt.seed);
    if (!opt.init_checkpoint.empty()) out.agent->load(opt.init_checkpoint);

    auto env = make_env(scenario, scenario.episode_horizon_steps);
    Rng act_rng(derive_seed(opt.seed, 0xA1));
    Rng train_rng(derive_seed(opt.seed, 0xA2));

    const auto wall_start = std::chrono::steady_clock::now();
    auto wall_exceeded = [&] {
        if (opt.wall_clock_limit_s <= 0) return false;
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                .count();
        return elapsed >= opt.wall_clock_limit_s;
    };

    Observation obs = env->reset(opt.seed);
    double last_loss = 0.0;
    std::int64_t episode_seed = opt.seed;

    for (std::int64_t step = 0; step < opt.env_steps; ++step) {
        const double eps = out.agent->current_epsilon();
        const int action = out.agent->act(env->context(), eps, act_rng);
        PomdpEnv::StepResult res = env->step(action);

        Transition tr;
        tr.obs = obs.flatten();
        tr.action = action;
        tr.reward = res.reward;
        tr.done = res.done;
        tr.next_obs = res.obs.flatten();
        out.agent->observe(std::move(tr));
        obs = res.obs;

        if ((step + 1) % opt.train_every == 0) {
            const TrainMetrics tm = out.agent->train_step(train_rng);
            if (!tm.skipped) last_loss = tm.loss;
        }

        const auto& w = env->last_window();
        for (std::size_t i = 0; i < w.goodput_bps.size(); ++i) {
            MetricRow row;
            row.time_s = w.time_s;
            row.conn_id = 1;
            row.subflow_id = static_cast<int>(i);
            row.goodput_bps = w.goodput_bps[i];
            row.rtt_ms = w.rtt_ms[i];
            row.cwnd = w.cwnd[i];
            row.loss_events = w.loss_events[i];
            row.reward = res.components[i].reward;
            row.loss_value = last_loss;
            row.epsilon = eps;
            out.log.rows.push_back(row);
        }

        out.env_steps = step + 1;
        if (res.done) {
            obs = env->reset(++episode_seed);
        }

        const bool eval_now =
            opt.eval_every > 0 && (step + 1) % opt.eval_every == 0;
        if (eval_now || wall_exceeded()) {
            out.final_eval = evaluate_agent(scenario, *out.agent,
                                            derive_seed(opt.seed, 0xE7A1 + step),
                                            opt.eval_duration_s);
            if (opt.verbose) {
                std::fprintf(stderr,
                             "[train %s] step %lld eps %.3f loss %.4g util %.3f rttx %.2f\n",
                             scenario.name.c_str(), static_cast<long long>(step + 1), eps,
                             last_loss, out.final_eval.utilization,
                             out.final_eval.rtt_ratio);
            }
            const bool util_ok = opt.target_utilization <= 0 ||
                                 out.final_eval.utilization >= opt.target_utilization;
            const bool rtt_ok = opt.target_rtt_ratio <= 0 ||
                                out.final_eval.rtt_ratio <= opt.target_rtt_ratio;
            if (util_ok && rtt_ok &&
                (opt.target_utilization > 0 || opt.target_rtt_ratio > 0)) {
                out.target_met = true;
                break;
            }
            if (wall_exceeded()) break;
            // Fresh episode after the eval pause; mark the cut so replay
            // windows never straddle it.
            out.agent->replay().break_episode();
            obs = env->reset(++episode_seed);
        }
    }
    out.train_steps = out.agent->train_steps();

    if (!opt.checkpoint_out.empty()) out.agent->save(opt.checkpoint_out);
    if (!opt.metrics_out.empty()) {
        std::ofstream os(opt.metrics_out);
        os << out.log.to_csv();
    }
    return out;
}

}  // namespace tcco
