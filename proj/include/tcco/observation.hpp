#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tcco/subflow.hpp"

namespace tcco {

// One subflow's slice of the observation vector. Built exclusively from
// that subflow's own metrics; nothing from sibling subflows may appear
// here (cross-flow blindness by construction).
struct SubflowObservation {
    double tput_smoothed_bps = 0.0;
    double rtt_smoothed_s = 0.0;
    double cwnd = 0.0;
    double bw_estimate_bps = 0.0;
    double base_rtt_s = 0.0;
    bool expflag = false;
    bool stale = false;  // carried forward because the window had no ACKs
};

constexpr int kObsFieldsPerSubflow = 6;

struct Observation {
    std::vector<SubflowObservation> subflows;

    std::size_t size() const { return subflows.size() * kObsFieldsPerSubflow; }
    // Fixed-width flattening: 6 scalars per subflow, expflag as 0/1.
    std::vector<double> flatten() const;
};

// Rolling window of the L most recent observations (c_t). Before
// warm-up the front is zero-padded and masked invalid.
class Context {
public:
    explicit Context(int length) : length_(length) {}

    void push(Observation obs);
    void clear() { window_.clear(); }

    int length() const { return length_; }
    int valid() const { return static_cast<int>(window_.size()); }
    const Observation& at(int i) const { return window_[static_cast<std::size_t>(i)]; }
    bool empty() const { return window_.empty(); }

private:
    int length_;
    std::deque<Observation> window_;
};

// Per-window aggregation of raw ACK reports into smoothed metrics.
// tput = sum(delivered_bytes)*8 / window; rtt = mean of samples. An
// empty window re-uses the previous values and flags them stale.
struct WindowAggregate {
    double tput_bps = 0.0;
    double rtt_s = 0.0;
    bool stale = true;  // stale until the first non-empty window
    std::int64_t acks = 0;
    std::int64_t loss_events = 0;
};

class WindowAggregator {
public:
    explicit WindowAggregator(double window_s) : window_s_(window_s) {}

    void add(const AckReport& r) {
        delivered_bytes_ += r.delivered_bytes;
        if (r.rtt_sample > 0.0) {
            rtt_sum_ += r.rtt_sample;
            ++rtt_n_;
        }
        ++acks_;
    }

    // Closes the current window and returns its aggregate.
    WindowAggregate close();

    double window_s() const { return window_s_; }

private:
    double window_s_;
    std::int64_t delivered_bytes_ = 0;
    double rtt_sum_ = 0.0;
    std::int64_t rtt_n_ = 0;
    std::int64_t acks_ = 0;
    WindowAggregate prev_;
};

// Free-function form used by tests and by the aggregator above.
WindowAggregate aggregate_window(const std::vector<AckReport>& reports, double window_s,
                                 const WindowAggregate* previous = nullptr);

// expflag: true iff the last `period` window-to-window transitions show
// no cwnd increase. Requires period+1 snapshots of history.
bool update_expflag(const std::vector<double>& cwnd_history, int period = 6);

// Client-side expflag bookkeeping: ring of window-end cwnd snapshots.
class ExpflagTracker {
public:
    explicit ExpflagTracker(int period = 6) : period_(period) {}

    void push(double cwnd) {
        history_.push_back(cwnd);
        const std::size_t keep = static_cast<std::size_t>(period_) + 1;
        while (history_.size() > keep) history_.pop_front();
    }

    bool flag() const {
        return update_expflag(std::vector<double>(history_.begin(), history_.end()),
                              period_);
    }

private:
    int period_;
    std::deque<double> history_;
};

}  // namespace tcco
