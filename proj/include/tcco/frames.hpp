#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tcco {

// Newline-delimited text records, one JSON object per line with a
// `type` field. Unknown fields are ignored on decode so either side can
// extend records without breaking the other.

struct MetricFrame {
    int v = 1;
    int conn_id = 0;
    int subflow_id = 0;
    std::int64_t seq = 0;
    std::int64_t timestamp_us = 0;
    std::int64_t delivered_bytes = 0;
    std::int64_t rtt_us = 0;  // mean over the report period; 0 = no sample
    double cwnd = 0.0;
    std::int64_t min_rtt_us = 0;
    std::int64_t bw_estimate_bps = 0;
    std::string mode = "normal";
    bool expflag = false;

    // Aggregation carriers (kept exact across the proxy hop).
    std::int64_t rtt_sum_us = 0;
    std::int64_t rtt_n = 0;
    bool stale = false;
    int batch = 0;  // records in this invocation, proxy -> engine only
};

struct DirectiveFrame {
    int v = 1;
    int conn_id = 0;
    std::int64_t decision_seq = 0;
    int subflow_id = -1;              // -1 = joint directive (engine -> proxy)
    std::vector<double> target_cwnd;  // one entry per subflow; single after demux
};

using Frame = std::variant<MetricFrame, DirectiveFrame>;

std::string encode_frame(const MetricFrame& m);
std::string encode_frame(const DirectiveFrame& d);

// Returns nullopt for malformed or untyped lines; callers count skips
// and keep the stream going.
std::optional<Frame> decode_frame(const std::string& line);

}  // namespace tcco
