#pragma once

#include <cstdint>
#include <vector>

#include "tcco/simclock.hpp"

namespace tcco {

// Simplified classical controllers used for comparison runs. They run
// inside the simulator directly, like the in-kernel algorithms they
// stand in for.

struct RenoState {
    double cwnd = 2.0;
    double ssthresh = 1e9;  // effectively infinite until the first loss
    std::int64_t ack_credit = 0;  // CA ack counter (one window => +1)
};

// Slow start below ssthresh, additive increase above, multiplicative
// decrease on loss.
void reno_on_ack(RenoState& s, std::int64_t acked_packets = 1);
void reno_on_loss(RenoState& s);

struct CubicConfig {
    double c = 0.4;
    double beta = 0.3;  // multiplicative-decrease fraction
};

// W(t) = C (t - K)^3 + W_max, K = cbrt(W_max * beta / C), floor 1.
double cubic_window(double t_since_loss_s, double w_max, double c, double beta);

struct CubicState {
    double cwnd = 2.0;
    double ssthresh = 1e9;
    double w_max = 0.0;
    TimeNs epoch_start = -1;  // <0: no loss epoch yet
    CubicConfig cfg;
};

void cubic_on_ack(CubicState& s, TimeNs now, std::int64_t acked_packets = 1);
void cubic_on_loss(CubicState& s, TimeNs now);

// Coupled increase for subflow i given all subflow cwnds and RTTs:
// min(a * 1/cwnd_total, 1/cwnd_i) per ACK, with the RFC 6356
// aggressiveness factor
//   a = cwnd_total * max_k(cwnd_k / rtt_k^2) / (sum_k cwnd_k / rtt_k)^2.
double lia_increase(const std::vector<double>& cwnd,
                    const std::vector<double>& rtt_s, std::size_t i);

struct LiaState {
    std::vector<double> cwnd;
    std::vector<double> ssthresh;
};

void lia_on_ack(LiaState& s, const std::vector<double>& rtt_s, std::size_t i,
                std::int64_t acked_packets = 1);
void lia_on_loss(LiaState& s, std::size_t i);

}  // namespace tcco
