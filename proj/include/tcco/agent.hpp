#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcco/action.hpp"
#include "tcco/layers.hpp"
#include "tcco/observation.hpp"
#include "tcco/qnet.hpp"
#include "tcco/replay.hpp"
#include "tcco/rng.hpp"

namespace tcco {

struct AgentConfig {
    nn::QNetworkConfig net;
    ActionSpace actions;

    double gamma = 0.969;
    double lr_init = 1e-4;
    double lr_min = 1e-6;
    double lr_decay = 0.96;
    int lr_decay_every = 10;       // gradient steps
    int batch = 32;
    std::size_t replay_capacity = 1'000'000;
    int target_sync_every = 10'000;  // gradient steps

    // Linear epsilon schedule over the first fraction of planned
    // training steps, floored at eps_end.
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.2;
    std::int64_t planned_train_steps = 10'000;

    // Featurizer reference scale (fallback when estimates are cold).
    double cwnd_max = 256.0;
};

struct TrainMetrics {
    double loss = 0.0;
    double lr = 0.0;
    std::int64_t step = 0;
    bool skipped = false;
    bool target_synced = false;
};

// Pure double-DQN backup for one position: the online net picks the
// next action, the target net evaluates it; termination drops the
// bootstrap entirely.
double double_dqn_backup(std::span<const double> q_next_online,
                         std::span<const double> q_next_target, double reward,
                         bool done, double gamma);

// Scale-free feature encoding of one raw observation (6 fields per
// subflow in, 6 per subflow out).
std::vector<double> featurize_observation(const std::vector<double>& raw, int subflows,
                                          double cwnd_max);

class DtqnAgent {
public:
    DtqnAgent(AgentConfig cfg, std::uint64_t seed);

    const AgentConfig& config() const { return cfg_; }

    // Epsilon-greedy action from a (possibly short) context of raw
    // observations. Ties resolve to the lowest action index.
    int act(const Context& ctx, double epsilon, Rng& rng) const;
    int act_greedy(const Context& ctx) const {
        Rng dummy(0);
        return act(ctx, 0.0, dummy);
    }

    double epsilon_at(std::int64_t train_step) const;
    double current_epsilon() const { return epsilon_at(train_steps_); }
    double learning_rate() const { return lr_; }
    std::int64_t train_steps() const { return train_steps_; }

    void observe(Transition tr) { replay_.push(std::move(tr)); }
    ReplayBuffer& replay() { return replay_; }

    TrainMetrics train_step(Rng& rng);
    void sync_target() { target_.copy_from(online_); }

    nn::QNetwork& online() { return online_; }
    nn::QNetwork& target() { return target_; }

    // Greedy Q values for a batch of windows (used by targets/tests).
    struct BatchTensors {
        nn::Tensor features;       // [B*L, obs_dim]
        std::vector<int> valid_from;
        std::vector<int> actions;      // flattened per position (pad=0)
        std::vector<double> rewards;   // pad=0
        std::vector<double> dones;     // pad=0
        std::vector<double> mask;      // 1 for real positions
        int batch = 0;
    };
    BatchTensors assemble(const std::vector<ReplayBuffer::Window>& windows,
                          bool next_side) const;

    // Eq.-style per-position targets over a batch of windows.
    std::vector<double> td_targets(const BatchTensors& next_batch, double gamma) const;

    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    nn::Tensor window_features(const std::vector<const std::vector<double>*>& obs,
                               int* valid_from) const;

    AgentConfig cfg_;
    nn::QNetwork online_;
    nn::QNetwork target_;
    ReplayBuffer replay_;
    nn::Adam adam_;
    double lr_;
    std::int64_t train_steps_ = 0;
};

}  // namespace tcco
