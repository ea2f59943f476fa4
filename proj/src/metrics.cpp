#include "tcco/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tcco {

const char* MetricLog::header() {
    return "time_s,conn_id,subflow_id,goodput_bps,rtt_ms,cwnd,loss_events,reward,"
           "loss_value,epsilon";
}

std::string MetricLog::to_csv() const {
    std::string out = header();
    out += '\n';
    char buf[256];
    for (const MetricRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%d,%d,%.3f,%.6f,%.3f,%lld,%.6g,%.6g,%.4f\n",
                      r.time_s, r.conn_id, r.subflow_id, r.goodput_bps, r.rtt_ms, r.cwnd,
                      static_cast<long long>(r.loss_events), r.reward, r.loss_value,
                      r.epsilon);
        out += buf;
    }
    return out;
}

MetricLog MetricLog::from_csv(const std::string& text) {
    MetricLog log;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("metrics: empty CSV");
    if (line != header()) throw std::runtime_error("metrics: unexpected CSV header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        MetricRow r;
        long long losses = 0;
        const int got = std::sscanf(line.c_str(), "%lf,%d,%d,%lf,%lf,%lf,%lld,%lf,%lf,%lf",
                                    &r.time_s, &r.conn_id, &r.subflow_id, &r.goodput_bps,
                                    &r.rtt_ms, &r.cwnd, &losses, &r.reward, &r.loss_value,
                                    &r.epsilon);
        if (got != 10) throw std::runtime_error("metrics: malformed row: " + line);
        r.loss_events = losses;
        log.rows.push_back(r);
    }
    return log;
}

namespace {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(acc / static_cast<double>(xs.size()));
    return m;
}

}  // namespace

Summary summarize(const MetricLog& log) {
    Summary s;
    // Aggregate conn-1 subflow goodputs per timestamp.
    std::map<double, double> per_window;
    std::vector<double> rtts;
    for (const MetricRow& r : log.rows) {
        if (r.conn_id != 1) continue;
        per_window[r.time_s] += r.goodput_bps;
        if (r.rtt_ms > 0) rtts.push_back(r.rtt_ms);
        s.loss_events += r.loss_events;
    }
    std::vector<double> agg;
    agg.reserve(per_window.size());
    for (const auto& [t, g] : per_window) {
        (void)t;
        agg.push_back(g);
    }
    const Moments mg = moments(agg);
    s.goodput_mean_bps = mg.mean;
    s.goodput_std_bps = mg.stddev;
    const Moments mr = moments(rtts);
    s.rtt_mean_ms = mr.mean;
    s.rtt_std_ms = mr.stddev;

    // JFI across connections when competitors are present.
    std::set<int> conns;
    for (const MetricRow& r : log.rows) conns.insert(r.conn_id);
    if (conns.size() > 1) {
        std::vector<double> rates;
        for (int c : conns) rates.push_back(goodput(log, c));
        s.jain_index = jain_index(rates);
    }
    return s;
}

double goodput(const MetricLog& log, int conn_id) {
    // Mean of the per-window aggregate over the log span.
    std::map<double, double> per_window;
    for (const MetricRow& r : log.rows) {
        if (r.conn_id != conn_id) continue;
        per_window[r.time_s] += r.goodput_bps;
    }
    if (per_window.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [t, g] : per_window) {
        (void)t;
        total += g;
    }
    return total / static_cast<double>(per_window.size());
}

double latency_violation(const MetricLog& log, const std::vector<double>& tau_ms,
                         double window_s) {
    double excess_s = 0.0;
    for (const MetricRow& r : log.rows) {
        if (r.conn_id != 1 || r.rtt_ms <= 0) continue;
        const std::size_t i = static_cast<std::size_t>(r.subflow_id);
        const double tau = i < tau_ms.size() ? tau_ms[i] : tau_ms.back();
        excess_s += std::max(0.0, (r.rtt_ms - tau) * 1e-3) * window_s;
    }
    return excess_s;
}

double jain_index(const std::vector<double>& rates) {
    if (rates.empty()) throw std::invalid_argument("jain_index: empty input");
    double sum = 0.0, sum_sq = 0.0;
    for (double x : rates) {
        if (x < 0) throw std::invalid_argument("jain_index: negative rate");
        sum += x;
        sum_sq += x * x;
    }
    if (sum_sq == 0.0) throw std::invalid_argument("jain_index: all-zero input");
    return sum * sum / (static_cast<double>(rates.size()) * sum_sq);
}

std::string Summary::to_json() const {
    nlohmann::json j;
    j["goodput_mean_bps"] = goodput_mean_bps;
    j["goodput_std_bps"] = goodput_std_bps;
    j["rtt_mean_ms"] = rtt_mean_ms;
    j["rtt_std_ms"] = rtt_std_ms;
    j["loss_events"] = loss_events;
    if (jain_index > 0) j["jain_index"] = jain_index;
    for (const auto& [k, v] : extra) j[k] = v;
    return j.dump(2);
}

}  // namespace tcco
