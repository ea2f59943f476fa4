#pragma once

#include <vector>

#include "tcco/observation.hpp"

namespace tcco {

// Hierarchical reward configuration. Boundary conditions give
// deterministic +-1; otherwise the reward blends an RTT penalty and a
// throughput reward through a sigmoid weight.
struct RewardConfig {
    double beta_s = 0.0;           // absolute RTT budget; 0 => beta_over_floor * d_f
    double beta_over_floor = 2.0;  // latency tolerance relative to the RTT floor
    double growth = 1.0;           // g
    double d_f_s = 0.010;          // RTT floor
    double sigma_s = 0.001;        // RTT resolution
    double kappa = 4.0;            // sigmoid steepness
    double w_d = 1.0;
    double w_rho = 0.0;            // 0 => 1 / bw_estimate (per-subflow normalization)
    int expflag_period = 6;
    double cwnd_min = 2.0;
    double cwnd_max = 1e9;

    double beta(double d_f) const {
        return beta_s > 0.0 ? beta_s : beta_over_floor * d_f;
    }
};

enum class BoundaryOverride { kNone, kPlusOne, kMinusOne };

struct RewardComponents {
    double threshold = 0.0;  // T
    double alpha = 0.0;
    double rtt_penalty = 0.0;     // P_D
    double tput_reward = 0.0;     // R_rho
    double reward = 0.0;          // R_i
    BoundaryOverride boundary = BoundaryOverride::kNone;
};

// T(D_min) = beta * (1 + g * (D_min - D_f) / sigma) / D_min, floored at
// 1 since the ratio D/D_min never drops below 1.
double reward_threshold(double d_min_s, const RewardConfig& cfg, double d_f_s);

// alpha = sigmoid(kappa * (D/D_min - T)).
double reward_alpha(double rtt_ratio, double threshold, double kappa);

// P_D = -w_D * (D/D_min - T).
double rtt_penalty(double rtt_ratio, double threshold, double w_d);

// R_rho = w_rho * rho.
double tput_reward(double tput_bps, double w_rho);

// Full per-subflow reward: boundary overrides first (post-action cwnd
// pinned at a bound, or action against an active expflag), then the
// expflag alignment bonus, then the blended term.
RewardComponents subflow_reward(const SubflowObservation& obs, int action_delta,
                                double post_action_cwnd, const RewardConfig& cfg,
                                double d_f_s);

double total_reward(const std::vector<RewardComponents>& components);

}  // namespace tcco
