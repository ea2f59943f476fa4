#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "tcco/grad_check.hpp"
#include "tcco/metrics.hpp"
#include "tcco/runner.hpp"
#include "tcco/scenario.hpp"
#include "tcco/trainer.hpp"

namespace fs = std::filesystem;
using namespace tcco;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

int cmd_run(const std::string& scenario_path, std::uint64_t seed, const std::string& out,
            const RunOptions& opt_in) {
    const Scenario s = parse_scenario(scenario_path);
    RunOptions opt = opt_in;
    opt.seed = seed;
    const RunResult res = run_scenario(s, opt);
    const fs::path dir(out.empty() ? "." : out);
    const std::string stem = s.name + "_seed" + std::to_string(seed);
    write_file(dir / (stem + ".csv"), res.log.to_csv());
    write_file(dir / (stem + ".summary.json"), res.summary.to_json() + "\n");
    std::cout << res.summary.to_json() << "\n";
    return 0;
}

int cmd_sweep(const std::string& scenario_path, int seeds, const std::string& out,
              const RunOptions& base) {
    const Scenario s = parse_scenario(scenario_path);
    const int n = seeds > 0 ? seeds : s.seeds;

    struct Cell {
        std::string label;
        RunOptions opt;
    };
    std::vector<Cell> cells;
    if (!s.loss_sweep.empty()) {
        for (double rate : s.loss_sweep) {
            Cell c{"loss" + std::to_string(rate), base};
            c.opt.loss_rate = rate;
            cells.push_back(std::move(c));
        }
    } else if (!s.queue_sweep.empty()) {
        for (std::int64_t q : s.queue_sweep) {
            Cell c{"queue" + std::to_string(q), base};
            c.opt.queue_packets = q;
            cells.push_back(std::move(c));
        }
    } else {
        cells.push_back({"", base});
    }

    const fs::path dir(out.empty() ? "." : out);
    for (const Cell& cell : cells) {
        std::vector<std::future<std::pair<std::string, std::string>>> jobs;
        for (int k = 0; k < n; ++k) {
            jobs.push_back(std::async(std::launch::async, [&, k] {
                RunOptions opt = cell.opt;
                opt.seed = static_cast<std::uint64_t>(k + 1);
                const RunResult r = run_scenario(s, opt);
                const std::string stem = s.name +
                                         (cell.label.empty() ? "" : "_" + cell.label) +
                                         "_seed" + std::to_string(k + 1);
                return std::make_pair(stem, r.log.to_csv() + "\x01" + r.summary.to_json());
            }));
            if (jobs.size() >= 2 || k + 1 == n) {  // two workers
                for (auto& j : jobs) {
                    auto [stem, blob] = j.get();
                    const auto cut = blob.find('\x01');
                    write_file(dir / (stem + ".csv"), blob.substr(0, cut));
                    write_file(dir / (stem + ".summary.json"), blob.substr(cut + 1) + "\n");
                    std::cout << stem << " done\n";
                }
                jobs.clear();
            }
        }
    }
    return 0;
}

int cmd_train(const std::string& scenario_path, const TrainOptions& topt) {
    const Scenario s = parse_scenario(scenario_path);
    const TrainResult res = train_agent(s, topt);
    std::cout << "env_steps " << res.env_steps << " train_steps " << res.train_steps
              << " eval_util " << res.final_eval.utilization << " eval_rtt_ratio "
              << res.final_eval.rtt_ratio << "\n";
    return 0;
}

int cmd_grad_check(std::uint64_t seed) {
    // Full-network gradient check on the small verification config.
    AgentConfig cfg;
    cfg.net.subflows = 2;
    cfg.net.fc_dim = 8;
    cfg.net.embed_dim = 8;
    cfg.net.heads = 4;
    cfg.net.ff_dim = 16;
    cfg.net.context_len = 4;
    cfg.net.actions = 9;
    cfg.actions.subflows = 2;
    cfg.actions.max_step = 1;
    cfg.batch = 4;
    DtqnAgent agent(cfg, seed);
    Rng rng(derive_seed(seed, 5));
    for (int i = 0; i < 64; ++i) {
        Transition tr;
        tr.obs.assign(12, 0.0);
        tr.next_obs.assign(12, 0.0);
        for (auto& x : tr.obs) x = rng.uniform01();
        for (auto& x : tr.next_obs) x = rng.uniform01();
        tr.action = static_cast<int>(rng.uniform_int(9));
        tr.reward = 2.0 * rng.uniform01() - 1.0;
        tr.done = (i % 16) == 15;
        agent.observe(std::move(tr));
    }
    const auto windows = agent.replay().sample(cfg.batch, cfg.net.context_len, rng);
    const auto cur = agent.assemble(windows, false);
    const auto next = agent.assemble(windows, true);
    const auto y = agent.td_targets(next, cfg.gamma);
    double mask_total = 0;
    for (double v : cur.mask) mask_total += v;
    auto graph = [&](nn::Tape& t) {
        auto q = agent.online().forward(t, cur.features, cur.batch, cur.valid_from);
        auto q_sa = t.select_per_row(q, cur.actions);
        auto yv = t.input(nn::Tensor(static_cast<int>(y.size()), 1,
                                     std::vector<double>(y.begin(), y.end())));
        auto d = t.sub(q_sa, yv);
        auto sq = t.hadamard(d, d);
        auto masked = t.hadamard(
            sq, t.input(nn::Tensor(static_cast<int>(cur.mask.size()), 1,
                                   std::vector<double>(cur.mask.begin(), cur.mask.end()))));
        return t.scale(t.sum_all(masked), 1.0 / mask_total);
    };
    auto params = agent.online().params();
    for (auto* p : params) p->zero_grad();
    {
        nn::Tape t;
        t.backward(graph(t));
    }
    auto forward = [&] {
        nn::Tape t;
        return t.value(graph(t))(0, 0);
    };
    const auto res = nn::check_gradients(forward, params);
    std::cout << "checked " << res.checked << " parameters; max relative error "
              << res.max_rel_err << " (worst: " << res.worst_param << ")\n";
    const bool ok = res.max_rel_err < 1e-4;
    std::cout << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

int cmd_report(const std::string& in_dir) {
    std::cout << "scenario,goodput_mean_bps,goodput_std_bps,rtt_mean_ms,rtt_std_ms,"
                 "loss_events,jain_index\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in_dir)) {
        if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream is(f);
        std::stringstream ss;
        ss << is.rdbuf();
        const Summary sum = summarize(MetricLog::from_csv(ss.str()));
        std::cout << f.stem().string() << "," << sum.goodput_mean_bps << ","
                  << sum.goodput_std_bps << "," << sum.rtt_mean_ms << ","
                  << sum.rtt_std_ms << "," << sum.loss_events << "," << sum.jain_index
                  << "\n";
    }
    return 0;
}

int cmd_engine_serve(int port, const std::string& scenario_path,
                     const std::string& checkpoint) {
    const Scenario s = parse_scenario(scenario_path);
    DtqnAgent agent(agent_config_for(s), 1);
    if (!checkpoint.empty()) agent.load(checkpoint);
    RewardConfig bounds = s.reward;
    if (bounds.cwnd_max <= 0) bounds.cwnd_max = default_cwnd_max(s);
    std::cerr << "engine listening on 127.0.0.1:" << port << "\n";
    engine_serve(port, agent, bounds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multipath congestion-control laboratory"};
    app.require_subcommand(1);

    // TCCO_VERBOSE=1 turns on progress logging to stderr.
    const char* verbose_env = std::getenv("TCCO_VERBOSE");
    const bool env_verbose = verbose_env != nullptr && verbose_env[0] == '1';

    std::string scenario_path, out_dir, checkpoint, engine_addr;
    std::uint64_t seed = 1;
    int seeds = 0;
    double duration = 0, interval = 0, delay = -1;
    double loss_override = -1;
    std::int64_t queue_override = 0;

    auto add_run_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--duration", duration, "override run duration (s)");
        cmd->add_option("--decision-interval", interval, "override decision interval (s)");
        cmd->add_option("--control-delay", delay, "override control delay (s)");
        cmd->add_option("--loss-rate", loss_override, "override path loss rate");
        cmd->add_option("--queue", queue_override, "override queue size (packets)");
    };
    auto collect_overrides = [&](RunOptions& opt) {
        if (duration > 0) opt.duration_s = duration;
        if (interval > 0) opt.decision_interval_s = interval;
        if (delay >= 0) opt.control_delay_s = delay;
        if (loss_override >= 0) opt.loss_rate = loss_override;
        if (queue_override > 0) opt.queue_packets = queue_override;
    };

    auto* run = app.add_subcommand("run", "run one scenario with one seed");
    run->add_option("--scenario", scenario_path, "scenario JSON")->required();
    run->add_option("--seed", seed, "run seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--checkpoint", checkpoint, "agent checkpoint to load");
    run->add_option("--engine", engine_addr, "out-of-process engine host:port");
    add_run_overrides(run);

    auto* sweep = app.add_subcommand("sweep", "run a scenario across seeds/sweep axes");
    sweep->add_option("--scenario", scenario_path, "scenario JSON")->required();
    sweep->add_option("--seeds", seeds, "number of seeds (default: scenario)");
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--checkpoint", checkpoint, "agent checkpoint to load");
    add_run_overrides(sweep);

    TrainOptions topt;
    auto* train = app.add_subcommand("train", "train the agent on a scenario");
    train->add_option("--scenario", scenario_path, "scenario JSON")->required();
    train->add_option("--steps", topt.env_steps, "environment steps");
    train->add_option("--train-every", topt.train_every, "env steps per gradient step");
    train->add_option("--seed", topt.seed, "training seed");
    train->add_option("--checkpoint", topt.checkpoint_out, "checkpoint output path");
    train->add_option("--metrics", topt.metrics_out, "training metrics CSV path");
    train->add_option("--init-checkpoint", topt.init_checkpoint, "warm-start parameters");
    train->add_option("--eval-every", topt.eval_every, "env steps between greedy evals");
    train->add_option("--target-util", topt.target_utilization, "early-stop utilization");
    train->add_option("--target-rtt-ratio", topt.target_rtt_ratio, "early-stop RTT ratio");
    train->add_option("--wall-clock-limit", topt.wall_clock_limit_s, "seconds");
    train->add_flag("--verbose", topt.verbose, "progress to stderr");

    auto* grad = app.add_subcommand("grad-check", "finite-difference check of the Q-network");
    std::uint64_t grad_seed = 2024;
    grad->add_option("--seed", grad_seed, "parameter/data seed");

    std::string report_in;
    auto* report = app.add_subcommand("report", "aggregate run CSVs into a table");
    report->add_option("--in", report_in, "directory of CSVs")->required();

    int engine_port = 7700;
    auto* serve = app.add_subcommand("engine-serve", "serve decisions over a socket");
    serve->add_option("--port", engine_port, "listen port (127.0.0.1)");
    serve->add_option("--scenario", scenario_path, "scenario JSON (agent shape)")->required();
    serve->add_option("--checkpoint", checkpoint, "agent checkpoint to load");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            RunOptions opt;
            opt.checkpoint = checkpoint;
            opt.engine_addr = engine_addr;
            collect_overrides(opt);
            return cmd_run(scenario_path, seed, out_dir, opt);
        }
        if (sweep->parsed()) {
            RunOptions opt;
            opt.checkpoint = checkpoint;
            collect_overrides(opt);
            return cmd_sweep(scenario_path, seeds, out_dir, opt);
        }
        if (train->parsed()) {
            topt.verbose = topt.verbose || env_verbose;
            return cmd_train(scenario_path, topt);
        }
        if (grad->parsed()) return cmd_grad_check(grad_seed);
        if (report->parsed()) return cmd_report(report_in);
        if (serve->parsed()) return cmd_engine_serve(engine_port, scenario_path, checkpoint);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
