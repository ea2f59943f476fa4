#include "tcco/reward.hpp"

#include <algorithm>
#include <cmath>

namespace tcco {

double reward_threshold(double d_min_s, const RewardConfig& cfg, double d_f_s) {
    const double beta = cfg.beta(d_f_s);
    const double t = beta * (1.0 + cfg.growth * (d_min_s - d_f_s) / cfg.sigma_s) / d_min_s;
    return std::max(1.0, t);
}

double reward_alpha(double rtt_ratio, double threshold, double kappa) {
    return 1.0 / (1.0 + std::exp(-kappa * (rtt_ratio - threshold)));
}

double rtt_penalty(double rtt_ratio, double threshold, double w_d) {
    return -w_d * (rtt_ratio - threshold);
}

double tput_reward(double tput_bps, double w_rho) {
    return w_rho * tput_bps;
}

RewardComponents subflow_reward(const SubflowObservation& obs, int action_delta,
                                double post_action_cwnd, const RewardConfig& cfg,
                                double d_f_s) {
    RewardComponents out;

    const double d_min = obs.base_rtt_s;
    const double d_bar = obs.rtt_smoothed_s;
    const double ratio = (d_min > 0.0 && d_bar > 0.0) ? d_bar / d_min : 1.0;
    out.threshold = d_min > 0.0 ? reward_threshold(d_min, cfg, d_f_s)
                                : reward_threshold(d_f_s, cfg, d_f_s);
    out.alpha = reward_alpha(ratio, out.threshold, cfg.kappa);
    out.rtt_penalty = rtt_penalty(ratio, out.threshold, cfg.w_d);
    const double w_rho =
        cfg.w_rho > 0.0
            ? cfg.w_rho
            : (obs.bw_estimate_bps > 0.0 ? 1.0 / obs.bw_estimate_bps : 0.0);
    out.tput_reward = tput_reward(obs.tput_smoothed_bps, w_rho);

    // Boundary conditions dominate everything else.
    if (post_action_cwnd <= cfg.cwnd_min || post_action_cwnd >= cfg.cwnd_max) {
        out.boundary = BoundaryOverride::kMinusOne;
        out.reward = -1.0;
        return out;
    }
    if (obs.expflag) {
        if (action_delta <= 0) {
            out.boundary = BoundaryOverride::kMinusOne;
            out.reward = -1.0;
            return out;
        }
        if (!obs.stale) {
            // Aligned exploration earns the bonus, unless the window was
            // a blackout (no fresh ACKs), in which case fall through.
            out.boundary = BoundaryOverride::kPlusOne;
            out.reward = 1.0;
            return out;
        }
    }
    out.reward = out.alpha * out.rtt_penalty + (1.0 - out.alpha) * out.tput_reward;
    return out;
}

double total_reward(const std::vector<RewardComponents>& components) {
    double total = 0.0;
    for (const RewardComponents& c : components) total += c.reward;
    return total;
}

}  // namespace tcco
