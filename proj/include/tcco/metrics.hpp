#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tcco {

// One CSV row per subflow per decision window. Header and column order
// are fixed; logs must reparse bit-for-bit into the same summary.
struct MetricRow {
    double time_s = 0.0;
    int conn_id = 0;
    int subflow_id = 0;
    double goodput_bps = 0.0;
    double rtt_ms = 0.0;
    double cwnd = 0.0;
    std::int64_t loss_events = 0;
    double reward = 0.0;
    double loss_value = 0.0;
    double epsilon = 0.0;
};

struct MetricLog {
    std::vector<MetricRow> rows;

    static const char* header();
    std::string to_csv() const;
    static MetricLog from_csv(const std::string& text);
};

struct Summary {
    double goodput_mean_bps = 0.0;  // aggregate over conn 1's subflows, per window
    double goodput_std_bps = 0.0;
    double rtt_mean_ms = 0.0;
    double rtt_std_ms = 0.0;
    std::int64_t loss_events = 0;
    double jain_index = 0.0;  // across connections; 0 when only one present
    std::map<std::string, double> extra;  // fct_<bytes>, utilization, ...

    std::string to_json() const;
};

// Deterministic recomputation from (parsed) rows only.
Summary summarize(const MetricLog& log);

// Aggregate goodput of one connection over the whole log span.
double goodput(const MetricLog& log, int conn_id);

// Sum over subflows of max(0, rtt - tau) integrated over rows, in
// seconds of excess (row spacing = one decision window).
double latency_violation(const MetricLog& log, const std::vector<double>& tau_ms,
                         double window_s);

// Jain's fairness index (sum x)^2 / (n sum x^2); requires a non-empty
// rate vector with at least one positive entry.
double jain_index(const std::vector<double>& rates);

}  // namespace tcco
