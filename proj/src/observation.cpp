#include "tcco/observation.hpp"

namespace tcco {

std::vector<double> Observation::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const SubflowObservation& s : subflows) {
        out.push_back(s.tput_smoothed_bps);
        out.push_back(s.rtt_smoothed_s);
        out.push_back(s.cwnd);
        out.push_back(s.bw_estimate_bps);
        out.push_back(s.base_rtt_s);
        out.push_back(s.expflag ? 1.0 : 0.0);
    }
    return out;
}

void Context::push(Observation obs) {
    window_.push_back(std::move(obs));
    while (static_cast<int>(window_.size()) > length_) window_.pop_front();
}

WindowAggregate WindowAggregator::close() {
    WindowAggregate out;
    if (acks_ == 0) {
        out = prev_;
        out.stale = true;
        out.acks = 0;
    } else {
        out.tput_bps = static_cast<double>(delivered_bytes_) * 8.0 / window_s_;
        out.rtt_s = rtt_n_ > 0 ? rtt_sum_ / static_cast<double>(rtt_n_) : prev_.rtt_s;
        out.stale = false;
        out.acks = acks_;
    }
    prev_ = out;
    delivered_bytes_ = 0;
    rtt_sum_ = 0.0;
    rtt_n_ = 0;
    acks_ = 0;
    return out;
}

WindowAggregate aggregate_window(const std::vector<AckReport>& reports, double window_s,
                                 const WindowAggregate* previous) {
    if (reports.empty()) {
        WindowAggregate out;
        if (previous != nullptr) out = *previous;
        out.stale = true;
        out.acks = 0;
        return out;
    }
    WindowAggregate out;
    std::int64_t bytes = 0;
    double rtt_sum = 0.0;
    std::int64_t rtt_n = 0;
    for (const AckReport& r : reports) {
        bytes += r.delivered_bytes;
        if (r.rtt_sample > 0.0) {
            rtt_sum += r.rtt_sample;
            ++rtt_n;
        }
    }
    out.tput_bps = static_cast<double>(bytes) * 8.0 / window_s;
    out.rtt_s = rtt_n > 0 ? rtt_sum / static_cast<double>(rtt_n)
                          : (previous != nullptr ? previous->rtt_s : 0.0);
    out.stale = false;
    out.acks = static_cast<std::int64_t>(reports.size());
    return out;
}

bool update_expflag(const std::vector<double>& cwnd_history, int period) {
    const int n = static_cast<int>(cwnd_history.size());
    if (n < period + 1) return false;
    for (int i = n - period; i < n; ++i) {
        if (cwnd_history[static_cast<std::size_t>(i)] >
            cwnd_history[static_cast<std::size_t>(i - 1)]) {
            return false;
        }
    }
    return true;
}

}  // namespace tcco
