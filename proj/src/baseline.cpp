#include "tcco/baseline.hpp"

#include <algorithm>
#include <cmath>

namespace tcco {

void reno_on_ack(RenoState& s, std::int64_t acked_packets) {
    for (std::int64_t k = 0; k < acked_packets; ++k) {
        if (s.cwnd < s.ssthresh) {
            s.cwnd += 1.0;
        } else {
            // One full window of ACKs adds one packet.
            s.ack_credit += 1;
            if (s.ack_credit >= static_cast<std::int64_t>(s.cwnd)) {
                s.cwnd += 1.0;
                s.ack_credit = 0;
            }
        }
    }
}

void reno_on_loss(RenoState& s) {
    s.ssthresh = std::max(2.0, s.cwnd / 2.0);
    s.cwnd = s.ssthresh;
    s.ack_credit = 0;
}

double cubic_window(double t_since_loss_s, double w_max, double c, double beta) {
    const double k = std::cbrt(w_max * beta / c);
    const double d = t_since_loss_s - k;
    return std::max(1.0, c * d * d * d + w_max);
}

void cubic_on_ack(CubicState& s, TimeNs now, std::int64_t acked_packets) {
    if (s.cwnd < s.ssthresh) {
        s.cwnd += static_cast<double>(acked_packets);
        return;
    }
    if (s.epoch_start < 0) {
        // First congestion-avoidance ACK without a loss epoch: treat the
        // current window as W_max so the curve grows from here.
        s.epoch_start = now;
        s.w_max = s.cwnd;
    }
    const double t = ns_to_seconds(now - s.epoch_start);
    const double target = cubic_window(t, s.w_max, s.cfg.c, s.cfg.beta);
    if (target > s.cwnd) {
        // Approach the curve at most one packet per ACK.
        s.cwnd += std::min(1.0, (target - s.cwnd) / s.cwnd *
                                    static_cast<double>(acked_packets));
        s.cwnd = std::min(s.cwnd, target);
    }
}

void cubic_on_loss(CubicState& s, TimeNs now) {
    s.w_max = s.cwnd;
    s.epoch_start = now;
    s.cwnd = std::max(1.0, s.cwnd * (1.0 - s.cfg.beta));
    s.ssthresh = std::max(2.0, s.cwnd);
}

double lia_increase(const std::vector<double>& cwnd,
                    const std::vector<double>& rtt_s, std::size_t i) {
    double total = 0.0;
    double best_ratio = 0.0;    // max_k cwnd_k / rtt_k^2
    double sum_rate = 0.0;      // sum_k cwnd_k / rtt_k
    for (std::size_t k = 0; k < cwnd.size(); ++k) {
        total += cwnd[k];
        const double r = rtt_s[k];
        best_ratio = std::max(best_ratio, cwnd[k] / (r * r));
        sum_rate += cwnd[k] / r;
    }
    const double a = total * best_ratio / (sum_rate * sum_rate);
    return std::min(a / total, 1.0 / cwnd[i]);
}

void lia_on_ack(LiaState& s, const std::vector<double>& rtt_s, std::size_t i,
                std::int64_t acked_packets) {
    for (std::int64_t k = 0; k < acked_packets; ++k) {
        if (s.cwnd[i] < s.ssthresh[i]) {
            s.cwnd[i] += 1.0;
        } else {
            s.cwnd[i] += lia_increase(s.cwnd, rtt_s, i);
        }
    }
}

void lia_on_loss(LiaState& s, std::size_t i) {
    s.ssthresh[i] = std::max(2.0, s.cwnd[i] / 2.0);
    s.cwnd[i] = s.ssthresh[i];
}

}  // namespace tcco
