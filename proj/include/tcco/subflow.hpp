#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "tcco/simclock.hpp"

namespace tcco {

enum class SubflowMode { kNormal, kRecovery, kStart, kProbe };

const char* to_string(SubflowMode m);
std::optional<SubflowMode> subflow_mode_from_string(std::string_view s);

// Per-subflow transport state visible to the scheduler and the
// observation pipeline. cwnd is kept fractional so baseline controllers
// can accumulate sub-packet increments.
struct SubflowState {
    int subflow_id = 0;
    double cwnd = 2.0;              // packets
    std::int64_t queued = 0;        // send-buffer backlog, packets
    std::int64_t in_flight = 0;     // transmitted, not yet acked
    SubflowMode mode = SubflowMode::kStart;
    double srtt = 0.0;              // seconds; 0 = no sample yet
    double last_rtt = 0.0;
    double min_rtt = 0.0;           // seconds; 0 = no estimate
    double max_delivery_rate = 0.0; // bits/second
    std::int64_t delivered_bytes = 0;
};

// Availability indicator: the window must have room for more than the
// committed packets and the subflow must not be repairing a loss.
inline bool availability(const SubflowState& s) {
    return s.cwnd > static_cast<double>(s.queued + s.in_flight) &&
           s.mode != SubflowMode::kRecovery;
}

// Min-RTT selection over available subflows. Returns the subflow_id, or
// nullopt when no subflow is available. Ties break to the lowest
// subflow_id; subflows without an RTT sample rank as zero (best), which
// lets cold subflows take their first packet.
std::optional<int> select_subflow(std::span<const SubflowState> subflows);

// Empirical packet-allocation accounting over a window.
struct AllocationStats {
    std::vector<std::int64_t> assigned;

    explicit AllocationStats(std::size_t m = 0) : assigned(m, 0) {}
    void record(std::size_t subflow_index) { ++assigned[subflow_index]; }
    void reset() { assigned.assign(assigned.size(), 0); }

    // p_i = assigned_i / sum; all-zero window gives all-zero shares.
    std::vector<double> shares() const;
};

// lambda_i = total_arrival_rate * p_i.
std::vector<double> allocation_load(double total_arrival_rate_bps,
                                    const std::vector<double>& shares);

// Classic transport smoothing, weight 1/8; first sample seeds directly.
inline double srtt_update(double srtt, double sample) {
    if (srtt <= 0.0) return sample;
    return srtt + (sample - srtt) / 8.0;
}

// Sliding-window extremum with a finite lifecycle: samples older than
// the horizon fall out, so estimates must be refreshed to stay alive.
template <bool kMax>
class WindowedExtremum {
public:
    void push(TimeNs t, double v) {
        while (!q_.empty() && better(v, q_.back().second)) q_.pop_back();
        q_.emplace_back(t, v);
    }
    void expire_before(TimeNs cutoff) {
        while (!q_.empty() && q_.front().first < cutoff) q_.pop_front();
    }
    bool empty() const { return q_.empty(); }
    double best() const { return q_.front().second; }
    TimeNs best_time() const { return q_.front().first; }
    void clear() { q_.clear(); }

private:
    static bool better(double a, double b) { return kMax ? a >= b : a <= b; }
    std::deque<std::pair<TimeNs, double>> q_;
};

using WindowedMax = WindowedExtremum<true>;
using WindowedMin = WindowedExtremum<false>;

// Per-ACK record handed from the transport to the control plane.
struct AckReport {
    int conn_id = 0;
    int subflow_id = 0;
    TimeNs t = 0;
    std::int64_t acked_packets = 0;
    std::int64_t delivered_bytes = 0;  // newly acked application bytes
    double rtt_sample = 0.0;           // seconds; 0 when no fresh sample
    double cwnd = 0.0;
    double srtt = 0.0;
    double min_rtt = 0.0;
    double bw_estimate_bps = 0.0;
    SubflowMode mode = SubflowMode::kNormal;
};

}  // namespace tcco
