#include "tcco/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tcco {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw std::runtime_error(origin + ": " + what);
}

void check_fields(const json& j, const std::set<std::string>& allowed,
                  const std::string& origin, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (allowed.count(key) == 0)
            fail(origin, "unknown field '" + key + "' in " + where);
    }
}

std::vector<CapacityPoint> parse_capacity(const json& jp, double duration_s,
                                          const std::string& origin) {
    std::vector<CapacityPoint> out;
    if (jp.contains("rate_bps")) {
        out.push_back({0, jp.at("rate_bps").get<double>()});
    }
    if (jp.contains("capacity_schedule")) {
        out.clear();
        for (const auto& e : jp.at("capacity_schedule")) {
            out.push_back({seconds_to_ns(e.at(0).get<double>()), e.at(1).get<double>()});
        }
    }
    if (jp.contains("oscillate")) {
        const json& o = jp.at("oscillate");
        check_fields(o, {"rates_bps", "period_s", "phase_s"}, origin, "oscillate");
        const auto rates = o.at("rates_bps").get<std::vector<double>>();
        const double period = o.at("period_s").get<double>();
        const double phase = o.value("phase_s", 0.0);
        if (rates.empty() || period <= 0) fail(origin, "bad oscillate spec");
        out.clear();
        // Expand a repeating step pattern across the run duration.
        double t = 0.0;
        std::size_t k = static_cast<std::size_t>(
            std::fmod(phase / period * static_cast<double>(rates.size()),
                      static_cast<double>(rates.size())));
        const double hold = period / static_cast<double>(rates.size());
        while (t < duration_s + period) {
            out.push_back({seconds_to_ns(t), rates[k % rates.size()]});
            ++k;
            t += hold;
        }
    }
    if (out.empty()) fail(origin, "path missing rate_bps/capacity_schedule/oscillate");
    if (out.front().start != 0) out.front().start = 0;
    return out;
}

std::vector<DelayPoint> parse_delays(const json& jp, double duration_s,
                                     const std::string& origin, TimeNs* prop_out) {
    std::vector<DelayPoint> out;
    TimeNs prop = 0;
    if (jp.contains("prop_delay_s")) prop = seconds_to_ns(jp.at("prop_delay_s").get<double>());
    if (jp.contains("delay_oscillate")) {
        const json& o = jp.at("delay_oscillate");
        check_fields(o, {"delays_s", "period_s", "phase_s"}, origin, "delay_oscillate");
        const auto delays = o.at("delays_s").get<std::vector<double>>();
        const double period = o.at("period_s").get<double>();
        if (delays.empty() || period <= 0) fail(origin, "bad delay_oscillate spec");
        double t = 0.0;
        std::size_t k = 0;
        const double hold = period / static_cast<double>(delays.size());
        while (t < duration_s + period) {
            out.push_back({seconds_to_ns(t), seconds_to_ns(delays[k % delays.size()])});
            ++k;
            t += hold;
        }
        prop = out.front().delay;
    }
    *prop_out = prop;
    return out;
}

}  // namespace

std::vector<std::vector<int>> Scenario::routes() const {
    if (!subflow_routes.empty()) return subflow_routes;
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < paths.size(); ++i)
        out.push_back({static_cast<int>(i)});
    return out;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(origin, "invalid JSON");
    if (!j.is_object()) fail(origin, "top level must be an object");
    check_fields(j,
                 {"name", "duration_s", "decision_interval_s", "control_delay_s",
                  "algorithm", "paths", "subflows", "competing", "app_rate_bps",
                  "flow_sizes_bytes", "seeds", "fixed_cwnd", "reward", "agent",
                  "episode_horizon_steps", "loss_sweep", "queue_sweep"},
                 origin, "scenario");

    Scenario s;
    s.name = j.value("name", std::string("unnamed"));
    s.duration_s = j.value("duration_s", 30.0);
    if (s.duration_s <= 0) fail(origin, "field 'duration_s' must be positive");
    s.decision_interval_s = j.value("decision_interval_s", 0.02);
    if (s.decision_interval_s <= 0)
        fail(origin, "field 'decision_interval_s' must be positive");
    s.control_delay_s = j.value("control_delay_s", 0.0);
    if (j.contains("algorithm")) {
        const auto a = algorithm_from_string(j.at("algorithm").get<std::string>());
        if (!a) fail(origin, "unknown algorithm '" + j.at("algorithm").get<std::string>() + "'");
        s.algorithm = *a;
    }
    if (!j.contains("paths")) fail(origin, "missing required field 'paths'");
    for (const auto& jp : j.at("paths")) {
        check_fields(jp,
                     {"rate_bps", "capacity_schedule", "oscillate", "prop_delay_s",
                      "delay_oscillate", "queue_packets", "loss_rate"},
                     origin, "path");
        PathSpec p;
        p.capacity_schedule = parse_capacity(jp, s.duration_s, origin);
        p.delay_schedule = parse_delays(jp, s.duration_s, origin, &p.prop_delay);
        p.queue_packets = jp.value("queue_packets", std::int64_t{100});
        p.loss_rate = jp.value("loss_rate", 0.0);
        s.paths.push_back(std::move(p));
    }
    if (s.paths.empty()) fail(origin, "field 'paths' must list at least one path");
    if (j.contains("subflows")) {
        for (const auto& e : j.at("subflows")) {
            check_fields(e, {"route"}, origin, "subflow");
            s.subflow_routes.push_back(e.at("route").get<std::vector<int>>());
        }
    }
    if (j.contains("competing")) {
        for (const auto& e : j.at("competing")) {
            check_fields(e, {"algorithm", "route", "start_s"}, origin, "competing");
            CompetingSpec c;
            const auto a = algorithm_from_string(e.at("algorithm").get<std::string>());
            if (!a) fail(origin, "unknown competing algorithm");
            c.algorithm = *a;
            c.route = e.at("route").get<std::vector<int>>();
            c.start_at = seconds_to_ns(e.value("start_s", 0.0));
            s.competing.push_back(std::move(c));
        }
    }
    s.app_rate_bps = j.value("app_rate_bps", 0.0);
    if (j.contains("flow_sizes_bytes"))
        s.flow_sizes_bytes = j.at("flow_sizes_bytes").get<std::vector<std::int64_t>>();
    s.seeds = j.value("seeds", 20);
    if (j.contains("fixed_cwnd")) {
        if (j.at("fixed_cwnd").is_number()) {
            s.fixed_cwnd = {j.at("fixed_cwnd").get<double>()};
        } else {
            s.fixed_cwnd = j.at("fixed_cwnd").get<std::vector<double>>();
        }
    }
    if (j.contains("reward")) {
        const json& r = j.at("reward");
        check_fields(r,
                     {"beta_s", "beta_over_floor", "growth", "d_f_s", "sigma_s", "kappa",
                      "w_d", "w_rho", "expflag_period", "cwnd_min", "cwnd_max"},
                     origin, "reward");
        s.reward.beta_s = r.value("beta_s", s.reward.beta_s);
        s.reward.beta_over_floor = r.value("beta_over_floor", s.reward.beta_over_floor);
        s.reward.growth = r.value("growth", s.reward.growth);
        if (r.contains("d_f_s")) {
            s.reward.d_f_s = r.at("d_f_s").get<double>();
            s.reward_d_f_set = true;
        }
        s.reward.sigma_s = r.value("sigma_s", s.reward.sigma_s);
        s.reward.kappa = r.value("kappa", s.reward.kappa);
        s.reward.w_d = r.value("w_d", s.reward.w_d);
        s.reward.w_rho = r.value("w_rho", s.reward.w_rho);
        s.reward.expflag_period = r.value("expflag_period", s.reward.expflag_period);
        s.reward.cwnd_min = r.value("cwnd_min", s.reward.cwnd_min);
        s.reward.cwnd_max = r.value("cwnd_max", 0.0);  // 0 = derive from BDP
    } else {
        s.reward.cwnd_max = 0.0;
    }
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        check_fields(a,
                     {"gamma", "lr_init", "context_len", "max_step", "scale_pkts",
                      "share_subflow_encoders"},
                     origin, "agent");
        if (a.contains("gamma")) s.agent.gamma = a.at("gamma").get<double>();
        if (a.contains("lr_init")) s.agent.lr_init = a.at("lr_init").get<double>();
        if (a.contains("context_len")) s.agent.context_len = a.at("context_len").get<int>();
        if (a.contains("max_step")) s.agent.max_step = a.at("max_step").get<int>();
        if (a.contains("scale_pkts")) s.agent.scale_pkts = a.at("scale_pkts").get<int>();
        if (a.contains("share_subflow_encoders"))
            s.agent.share_subflow_encoders = a.at("share_subflow_encoders").get<bool>();
    }
    s.episode_horizon_steps = j.value("episode_horizon_steps", 512);
    if (j.contains("loss_sweep")) s.loss_sweep = j.at("loss_sweep").get<std::vector<double>>();
    if (j.contains("queue_sweep"))
        s.queue_sweep = j.at("queue_sweep").get<std::vector<std::int64_t>>();

    for (const auto& r : s.routes()) {
        for (int pid : r) {
            if (pid < 0 || pid >= static_cast<int>(s.paths.size()))
                fail(origin, "subflow route references unknown path");
        }
    }
    return s;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("scenario: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario_text(ss.str(), path);
}

std::string emit_scenario(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["duration_s"] = s.duration_s;
    j["decision_interval_s"] = s.decision_interval_s;
    j["control_delay_s"] = s.control_delay_s;
    j["algorithm"] = to_string(s.algorithm);
    json paths = json::array();
    for (const PathSpec& p : s.paths) {
        json jp;
        json sched = json::array();
        for (const CapacityPoint& c : p.capacity_schedule)
            sched.push_back({ns_to_seconds(c.start), c.rate_bps});
        jp["capacity_schedule"] = sched;
        jp["prop_delay_s"] = ns_to_seconds(p.prop_delay);
        jp["queue_packets"] = p.queue_packets;
        jp["loss_rate"] = p.loss_rate;
        paths.push_back(jp);
    }
    j["paths"] = paths;
    if (!s.subflow_routes.empty()) {
        json subs = json::array();
        for (const auto& r : s.subflow_routes) subs.push_back(json{{"route", r}});
        j["subflows"] = subs;
    }
    if (!s.competing.empty()) {
        json comps = json::array();
        for (const auto& c : s.competing) {
            comps.push_back(json{{"algorithm", to_string(c.algorithm)},
                                 {"route", c.route},
                                 {"start_s", ns_to_seconds(c.start_at)}});
        }
        j["competing"] = comps;
    }
    if (s.app_rate_bps > 0) j["app_rate_bps"] = s.app_rate_bps;
    if (!s.flow_sizes_bytes.empty()) j["flow_sizes_bytes"] = s.flow_sizes_bytes;
    j["seeds"] = s.seeds;
    if (!s.fixed_cwnd.empty()) j["fixed_cwnd"] = s.fixed_cwnd;
    j["episode_horizon_steps"] = s.episode_horizon_steps;
    if (!s.loss_sweep.empty()) j["loss_sweep"] = s.loss_sweep;
    if (!s.queue_sweep.empty()) j["queue_sweep"] = s.queue_sweep;
    return j.dump(2);
}

std::unique_ptr<SimBundle> build_sim(const Scenario& s, std::uint64_t seed,
                                     double cwnd_min, double cwnd_max) {
    auto bundle = std::make_unique<SimBundle>();
    bundle->net = std::make_unique<Network>(seed);
    for (const PathSpec& p : s.paths) {
        bundle->net->add_path(p.capacity_schedule, p.prop_delay, p.queue_packets,
                              p.loss_rate, p.delay_schedule);
    }
    ConnectionConfig cc;
    cc.conn_id = 1;
    cc.algo = s.algorithm;
    cc.routes = s.routes();
    cc.fixed_cwnd = s.fixed_cwnd;
    cc.app_rate_bps = s.app_rate_bps;
    cc.flow_size_bytes = s.active_flow_size_bytes;
    cc.cwnd_min = cwnd_min;
    cc.cwnd_max = cwnd_max;
    bundle->conn = std::make_unique<Connection>(*bundle->net, cc);
    int next_conn = 2;
    for (const CompetingSpec& comp : s.competing) {
        ConnectionConfig oc;
        oc.conn_id = next_conn++;
        oc.algo = comp.algorithm;
        oc.routes = {comp.route};
        oc.start_at = comp.start_at;
        bundle->competitors.push_back(
            std::make_unique<Connection>(*bundle->net, oc));
    }
    for (const auto& route : cc.routes) {
        bundle->base_rtt_s.push_back(ns_to_seconds(bundle->net->base_rtt(route)));
        double bottleneck = 1e18;
        for (int pid : route)
            bottleneck =
                std::min(bottleneck, s.paths[static_cast<std::size_t>(pid)]
                                         .capacity_schedule.front()
                                         .rate_bps);
        bundle->bottleneck_bps.push_back(bottleneck);
    }
    return bundle;
}

double mean_aggregate_capacity_bps(const Scenario& s, double t0_s, double t1_s) {
    double total = 0.0;
    for (const auto& route : s.routes()) {
        // Bottleneck hop of the route, integrated over the interval.
        double best = 1e18;
        for (int pid : route) {
            const auto& sched = s.paths[static_cast<std::size_t>(pid)].capacity_schedule;
            double integral = 0.0;
            for (std::size_t k = 0; k < sched.size(); ++k) {
                const double seg_start = std::max(t0_s, ns_to_seconds(sched[k].start));
                const double seg_end =
                    k + 1 < sched.size() ? std::min(t1_s, ns_to_seconds(sched[k + 1].start))
                                         : t1_s;
                if (seg_end > seg_start) integral += sched[k].rate_bps * (seg_end - seg_start);
            }
            best = std::min(best, integral / (t1_s - t0_s));
        }
        total += best;
    }
    return total;
}

double default_cwnd_max(const Scenario& s) {
    double max_bdp = 8.0;
    const auto routes = s.routes();
    for (const auto& route : routes) {
        double rate = 1e18;
        TimeNs rtt = 0;
        for (int pid : route) {
            const PathSpec& p = s.paths[static_cast<std::size_t>(pid)];
            rate = std::min(rate, p.capacity_schedule.front().rate_bps);
            rtt += 2 * (p.delay_schedule.empty() ? p.prop_delay
                                                 : p.delay_schedule.front().delay);
        }
        const double bdp = rate * ns_to_seconds(rtt) / (kMtuBytes * 8.0);
        max_bdp = std::max(max_bdp, bdp);
    }
    return 4.0 * max_bdp;
}

}  // namespace tcco
