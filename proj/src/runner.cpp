#include "tcco/runner.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace tcco {

Scenario apply_overrides(Scenario s, const RunOptions& opt) {
    if (opt.duration_s) s.duration_s = *opt.duration_s;
    if (opt.decision_interval_s) s.decision_interval_s = *opt.decision_interval_s;
    if (opt.control_delay_s) s.control_delay_s = *opt.control_delay_s;
    for (PathSpec& p : s.paths) {
        if (opt.loss_rate) p.loss_rate = *opt.loss_rate;
        if (opt.queue_packets) p.queue_packets = *opt.queue_packets;
    }
    return s;
}

AgentConfig agent_config_for(const Scenario& s) {
    AgentConfig cfg;
    cfg.actions.subflows = s.subflow_count();
    cfg.actions.max_step = s.agent.max_step.value_or(2);
    cfg.actions.scale_pkts = s.agent.scale_pkts.value_or(2);
    cfg.net.subflows = s.subflow_count();
    cfg.net.actions = cfg.actions.size();
    cfg.net.context_len = s.agent.context_len.value_or(20);
    cfg.net.use_transformer = s.algorithm != CcAlgorithm::kTccoNoTransformer;
    if (!cfg.net.use_transformer) cfg.net.context_len = 1;
    if (s.agent.share_subflow_encoders)
        cfg.net.share_subflow_encoders = *s.agent.share_subflow_encoders;
    if (s.agent.gamma) cfg.gamma = *s.agent.gamma;
    if (s.agent.lr_init) cfg.lr_init = *s.agent.lr_init;
    cfg.cwnd_max = s.reward.cwnd_max > 0 ? s.reward.cwnd_max : default_cwnd_max(s);
    return cfg;
}

std::unique_ptr<PomdpEnv> make_env(const Scenario& s, int horizon_steps) {
    EnvConfig ec;
    ec.cp.window = seconds_to_ns(s.decision_interval_s);
    ec.cp.proxy_engine_delay = seconds_to_ns(s.control_delay_s);
    ec.cp.expflag_period = s.reward.expflag_period;
    ec.reward = s.reward;
    if (ec.reward.cwnd_max <= 0) ec.reward.cwnd_max = default_cwnd_max(s);
    if (s.reward_d_f_set) {
        ec.d_f_s.assign(static_cast<std::size_t>(s.subflow_count()), s.reward.d_f_s);
    }
    ec.actions.subflows = s.subflow_count();
    ec.actions.max_step = s.agent.max_step.value_or(2);
    ec.actions.scale_pkts = s.agent.scale_pkts.value_or(2);
    ec.context_len = s.agent.context_len.value_or(20);
    ec.horizon_steps = horizon_steps;
    Scenario copy = s;
    const double cwnd_min = ec.reward.cwnd_min;
    const double cwnd_max = ec.reward.cwnd_max;
    SimFactory factory = [copy, cwnd_min, cwnd_max](std::uint64_t seed) {
        return build_sim(copy, seed, cwnd_min, cwnd_max);
    };
    return std::make_unique<PomdpEnv>(std::move(factory), ec);
}

namespace {

// Per-connection window tap for runs that bypass the control plane
// (baselines) and for competitor flows in agent runs.
struct WindowTap {
    Connection* conn;
    std::vector<double> rtt_sum;
    std::vector<std::int64_t> rtt_n;
    std::vector<std::int64_t> delivered_seen;
    std::vector<std::int64_t> loss_seen;

    explicit WindowTap(Connection* c) : conn(c) {
        const std::size_t m = c->subflow_count();
        rtt_sum.assign(m, 0.0);
        rtt_n.assign(m, 0);
        delivered_seen.assign(m, 0);
        loss_seen.assign(m, 0);
        c->set_ack_report_hook([this](const AckReport& r) {
            const std::size_t i = static_cast<std::size_t>(r.subflow_id);
            if (r.rtt_sample > 0) {
                rtt_sum[i] += r.rtt_sample;
                ++rtt_n[i];
            }
        });
    }

    void emit(MetricLog& log, double time_s, double window_s) {
        for (std::size_t i = 0; i < rtt_sum.size(); ++i) {
            MetricRow row;
            row.time_s = time_s;
            row.conn_id = conn->conn_id();
            row.subflow_id = static_cast<int>(i);
            const std::int64_t delivered = conn->delivered_app_bytes(i);
            row.goodput_bps =
                static_cast<double>(delivered - delivered_seen[i]) * 8.0 / window_s;
            delivered_seen[i] = delivered;
            row.rtt_ms = rtt_n[i] > 0 ? rtt_sum[i] / static_cast<double>(rtt_n[i]) * 1e3
                                      : 0.0;
            rtt_sum[i] = 0.0;
            rtt_n[i] = 0;
            row.cwnd = conn->state(i).cwnd;
            const std::int64_t losses = conn->loss_events(i);
            row.loss_events = losses - loss_seen[i];
            loss_seen[i] = losses;
            log.rows.push_back(row);
        }
    }
};

void run_baseline(const Scenario& base_s, const RunOptions& opt, std::int64_t flow_size,
                  MetricLog& log, std::map<std::string, double>& fct) {
    Scenario s = base_s;
    s.active_flow_size_bytes = flow_size;  // fresh connection per flow
    auto bundle = build_sim(s, opt.seed, 2.0, 1e9);
    WindowTap tap(bundle->conn.get());
    std::vector<std::unique_ptr<WindowTap>> taps;
    for (auto& comp : bundle->competitors) taps.push_back(std::make_unique<WindowTap>(comp.get()));
    bundle->conn->start();
    for (auto& comp : bundle->competitors) comp->start();

    const TimeNs window = seconds_to_ns(s.decision_interval_s);
    const TimeNs horizon = seconds_to_ns(s.duration_s);
    for (TimeNs t = window; t <= horizon; t += window) {
        bundle->net->clock().advance(t);
        const double time_s = ns_to_seconds(t);
        tap.emit(log, time_s, s.decision_interval_s);
        for (auto& ct : taps) ct->emit(log, time_s, s.decision_interval_s);
        if (flow_size > 0 && bundle->conn->flow_complete()) break;
    }
    if (flow_size > 0 && bundle->conn->flow_complete()) {
        fct[std::to_string(flow_size)] = ns_to_seconds(
            bundle->conn->flow_complete_time() - bundle->conn->first_send_time());
    }
}

// Socket helpers for the out-of-process engine mode.
int connect_engine(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("engine addr must be host:port");
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("engine: socket failed");
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
        throw std::runtime_error("engine: bad address " + host);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
        ::close(fd);
        throw std::runtime_error("engine: connect to " + addr + " failed");
    }
    return fd;
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n <= 0) throw std::runtime_error("engine: write failed");
        off += static_cast<std::size_t>(n);
    }
}

bool read_line(int fd, std::string& buffer, std::string& line) {
    while (true) {
        const auto nl = buffer.find('\n');
        if (nl != std::string::npos) {
            line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            return true;
        }
        char chunk[4096];
        const ssize_t n = ::read(fd, chunk, sizeof(chunk));
        if (n <= 0) return false;
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

std::string snapshot_lines(const Observation& obs, std::int64_t seq) {
    std::string out;
    for (std::size_t i = 0; i < obs.subflows.size(); ++i) {
        const SubflowObservation& o = obs.subflows[i];
        MetricFrame m;
        m.conn_id = 1;
        m.subflow_id = static_cast<int>(i);
        m.seq = seq;
        m.delivered_bytes = 0;
        m.rtt_us = static_cast<std::int64_t>(std::llround(o.rtt_smoothed_s * 1e6));
        m.rtt_sum_us = m.rtt_us;
        m.rtt_n = m.rtt_us > 0 ? 1 : 0;
        m.cwnd = o.cwnd;
        m.min_rtt_us = static_cast<std::int64_t>(std::llround(o.base_rtt_s * 1e6));
        m.bw_estimate_bps = static_cast<std::int64_t>(o.bw_estimate_bps);
        m.expflag = o.expflag;
        m.stale = o.stale;
        m.batch = static_cast<int>(obs.subflows.size());
        // Throughput rides delivered_bytes over a nominal 1 s window.
        m.delivered_bytes = static_cast<std::int64_t>(o.tput_smoothed_bps / 8.0);
        out += encode_frame(m);
        out += '\n';
    }
    return out;
}

void run_agent_driven(const Scenario& base_s, const RunOptions& opt,
                      std::int64_t flow_size, MetricLog& log,
                      std::map<std::string, double>& fct) {
    Scenario s = base_s;
    s.active_flow_size_bytes = flow_size;
    const int total_steps =
        static_cast<int>(std::llround(s.duration_s / s.decision_interval_s));
    auto env = make_env(s, total_steps + 16);

    std::unique_ptr<DtqnAgent> own_agent;
    DtqnAgent* agent = opt.agent;
    if (agent == nullptr) {
        own_agent = std::make_unique<DtqnAgent>(agent_config_for(s), opt.seed);
        if (!opt.checkpoint.empty()) own_agent->load(opt.checkpoint);
        agent = own_agent.get();
    }

    int engine_fd = -1;
    std::string engine_buf;
    if (!opt.engine_addr.empty()) engine_fd = connect_engine(opt.engine_addr);

    env->reset(opt.seed);
    Rng rng(derive_seed(opt.seed, 0xAC));
    std::vector<std::unique_ptr<WindowTap>> comp_taps;
    for (Connection* comp : env->competitors())
        comp_taps.push_back(std::make_unique<WindowTap>(comp));

    for (int step = 0; step < total_steps; ++step) {
        if (flow_size > 0 && env->connection().flow_complete()) break;
        PomdpEnv::StepResult res;
        if (engine_fd >= 0) {
            write_all(engine_fd, snapshot_lines(env->observation(),
                                                static_cast<std::int64_t>(step)));
            std::string line;
            if (!read_line(engine_fd, engine_buf, line))
                throw std::runtime_error("engine: connection closed");
            auto decoded = decode_frame(line);
            const auto* d = decoded ? std::get_if<DirectiveFrame>(&*decoded) : nullptr;
            if (d == nullptr) throw std::runtime_error("engine: bad directive line");
            res = env->step_with_targets(d->target_cwnd);
        } else {
            const int action = agent->act(env->context(), 0.0, rng);
            res = env->step(action);
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
            log.rows.push_back(row);
        }
        for (auto& ct : comp_taps) ct->emit(log, w.time_s, s.decision_interval_s);
        if (flow_size > 0 && env->connection().flow_complete()) break;
    }
    if (flow_size > 0 && env->connection().flow_complete()) {
        fct[std::to_string(flow_size)] =
            ns_to_seconds(env->connection().flow_complete_time() -
                          env->connection().first_send_time());
    }
    if (engine_fd >= 0) ::close(engine_fd);
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& opt) {
    const Scenario s = apply_overrides(scenario, opt);
    RunResult out;
    out.duration_s = s.duration_s;

    const bool agent_mode = is_agent_algorithm(s.algorithm);
    if (!s.flow_sizes_bytes.empty()) {
        for (std::int64_t size : s.flow_sizes_bytes) {
            Scenario flow_s = s;
            flow_s.flow_sizes_bytes.clear();
            if (agent_mode) {
                run_agent_driven(flow_s, opt, size, out.log, out.fct_s);
            } else {
                run_baseline(flow_s, opt, size, out.log, out.fct_s);
            }
        }
    } else if (agent_mode) {
        run_agent_driven(s, opt, 0, out.log, out.fct_s);
    } else {
        run_baseline(s, opt, 0, out.log, out.fct_s);
    }

    // Summary from the serialized text so any reparse agrees bit for bit.
    const std::string csv = out.log.to_csv();
    const MetricLog reparsed = MetricLog::from_csv(csv);
    out.summary = summarize(reparsed);
    for (const auto& [k, v] : out.fct_s) out.summary.extra["fct_" + k + "_s"] = v;
    const double cap = mean_aggregate_capacity_bps(s, 0.0, s.duration_s);
    if (cap > 0)
        out.summary.extra["utilization"] = out.summary.goodput_mean_bps / cap;
    return out;
}

EvalStats eval_stats(const Scenario& s, const RunResult& run) {
    EvalStats e;
    e.goodput_bps = run.summary.goodput_mean_bps;
    const double cap = mean_aggregate_capacity_bps(s, 0.0, run.duration_s);
    e.utilization = cap > 0 ? e.goodput_bps / cap : 0.0;
    double base = 0.0;
    for (const auto& route : s.routes()) {
        double rtt = 0.0;
        for (int pid : route) {
            const PathSpec& p = s.paths[static_cast<std::size_t>(pid)];
            rtt += 2.0 * ns_to_seconds(p.delay_schedule.empty()
                                           ? p.prop_delay
                                           : p.delay_schedule.front().delay);
            rtt += kMtuBytes * 8.0 / p.capacity_schedule.front().rate_bps;
        }
        base += rtt;
    }
    base /= static_cast<double>(s.routes().size());
    e.rtt_ratio = base > 0 ? run.summary.rtt_mean_ms * 1e-3 / base : 0.0;
    return e;
}

void engine_serve_fd(int fd, DtqnAgent& agent, const RewardConfig& bounds) {
    std::string buf;
    std::string line;
    Context ctx(agent.config().net.context_len);
    std::map<std::int64_t, std::vector<MetricFrame>> inbox;
    std::int64_t decision_seq = 0;
    while (read_line(fd, buf, line)) {
        auto decoded = decode_frame(line);
        if (!decoded) continue;
        const auto* m = std::get_if<MetricFrame>(&*decoded);
        if (m == nullptr) continue;
        auto& batch = inbox[m->seq];
        batch.push_back(*m);
        if (m->batch <= 0 || static_cast<int>(batch.size()) != m->batch) continue;

        Observation obs;
        obs.subflows.resize(batch.size());
        for (const MetricFrame& f : batch) {
            const std::size_t i = static_cast<std::size_t>(f.subflow_id);
            if (i >= obs.subflows.size()) continue;
            SubflowObservation& o = obs.subflows[i];
            o.tput_smoothed_bps = static_cast<double>(f.delivered_bytes) * 8.0;
            o.rtt_smoothed_s = static_cast<double>(f.rtt_us) * 1e-6;
            o.cwnd = f.cwnd;
            o.bw_estimate_bps = static_cast<double>(f.bw_estimate_bps);
            o.base_rtt_s = static_cast<double>(f.min_rtt_us) * 1e-6;
            o.expflag = f.expflag;
            o.stale = f.stale;
        }
        inbox.erase(m->seq);
        ctx.push(obs);

        Rng rng(0);
        const int action = agent.act(ctx, 0.0, rng);
        const auto deltas = agent.config().actions.decode(action);
        DirectiveFrame d;
        d.conn_id = m->conn_id;
        d.decision_seq = ++decision_seq;
        d.target_cwnd.resize(obs.subflows.size());
        for (std::size_t i = 0; i < obs.subflows.size(); ++i) {
            const double want =
                obs.subflows[i].cwnd + agent.config().actions.cwnd_delta(deltas[i]);
            d.target_cwnd[i] = std::min(bounds.cwnd_max, std::max(bounds.cwnd_min, want));
        }
        write_all(fd, encode_frame(d) + "\n");
    }
}

void engine_serve(int port, DtqnAgent& agent, const RewardConfig& bounds) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw std::runtime_error("engine: socket failed");
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<std::uint16_t>(port));
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(listener, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
        throw std::runtime_error("engine: bind failed");
    if (::listen(listener, 1) != 0) throw std::runtime_error("engine: listen failed");
    while (true) {
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) continue;
        engine_serve_fd(fd, agent, bounds);
        ::close(fd);
    }
}

}  // namespace tcco
