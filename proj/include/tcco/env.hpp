#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "tcco/action.hpp"
#include "tcco/connection.hpp"
#include "tcco/control_plane.hpp"
#include "tcco/network.hpp"
#include "tcco/observation.hpp"
#include "tcco/reward.hpp"

namespace tcco {

// Everything one experiment instance owns. The factory rebuilds it for
// each episode so resets are bit-reproducible from the seed.
struct SimBundle {
    std::unique_ptr<Network> net;
    std::unique_ptr<Connection> conn;
    std::vector<std::unique_ptr<Connection>> competitors;
    std::vector<double> base_rtt_s;        // per subflow, from empty-network RTT
    std::vector<double> bottleneck_bps;    // per subflow, initial bottleneck rate
};

using SimFactory = std::function<std::unique_ptr<SimBundle>(std::uint64_t seed)>;

struct EnvConfig {
    ControlPlaneConfig cp;
    RewardConfig reward;
    ActionSpace actions;
    int context_len = 20;
    int horizon_steps = 512;
    // RTT floor per subflow; empty = use the measured base RTT.
    std::vector<double> d_f_s;
    TimeNs warmup_limit = 60'000'000'000;  // give up if handoff never happens
};

// POMDP wrapper: decodes joint actions into cwnd directives, advances
// the simulation one decision interval through the control plane,
// assembles the observation, and computes the hierarchical reward.
class PomdpEnv {
public:
    PomdpEnv(SimFactory factory, EnvConfig cfg);

    const Observation& reset(std::uint64_t seed);

    struct StepResult {
        Observation obs;
        double reward = 0.0;
        bool done = false;
        std::vector<RewardComponents> components;
    };
    StepResult step(int action_index);

    // Externally computed directive (out-of-process engine); reward
    // deltas are inferred from the targets.
    StepResult step_with_targets(const std::vector<double>& targets);

    struct WindowStats {
        std::vector<double> goodput_bps;
        std::vector<double> rtt_ms;
        std::vector<double> cwnd;
        std::vector<std::int64_t> loss_events;
        double time_s = 0.0;
    };
    const WindowStats& last_window() const { return window_stats_; }

    const Context& context() const { return context_; }
    const Observation& observation() const { return last_obs_; }
    int action_count() const { return cfg_.actions.size(); }
    const EnvConfig& config() const { return cfg_; }
    int steps() const { return step_count_; }

    Network& network() { return *bundle_->net; }
    Connection& connection() { return *bundle_->conn; }
    std::vector<Connection*> competitors() {
        std::vector<Connection*> out;
        for (auto& c : bundle_->competitors) out.push_back(c.get());
        return out;
    }
    ControlPlane& control_plane() { return *cp_; }
    const std::vector<double>& base_rtt_s() const { return bundle_->base_rtt_s; }
    double d_f(std::size_t i) const;

private:
    Observation snapshot_to_obs(const EngineSnapshot& snap) const;
    void advance_to_next_snapshot();
    void collect_window_stats();
    StepResult do_step(const std::vector<int>& deltas, const std::vector<double>& targets);

    SimFactory factory_;
    EnvConfig cfg_;
    std::unique_ptr<SimBundle> bundle_;
    std::unique_ptr<ControlPlane> cp_;
    std::deque<EngineSnapshot> inbox_;
    Observation last_obs_;
    Context context_;
    WindowStats window_stats_;
    std::vector<std::int64_t> loss_seen_;
    std::vector<std::int64_t> delivered_seen_;
    int step_count_ = 0;
    std::int64_t episode_ = 0;
};

}  // namespace tcco
