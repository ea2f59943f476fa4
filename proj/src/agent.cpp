#include "tcco/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcco/checkpoint.hpp"

namespace tcco {

using nn::Tape;
using nn::Tensor;

double double_dqn_backup(std::span<const double> q_next_online,
                         std::span<const double> q_next_target, double reward,
                         bool done, double gamma) {
    if (done) return reward;
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_next_online.size(); ++a)
        if (q_next_online[a] > q_next_online[best]) best = a;
    return reward + gamma * q_next_target[best];
}

std::vector<double> featurize_observation(const std::vector<double>& raw, int subflows,
                                          double cwnd_max) {
    (void)cwnd_max;
    std::vector<double> out(raw.size());
    for (int i = 0; i < subflows; ++i) {
        const std::size_t o = static_cast<std::size_t>(i) * kObsFieldsPerSubflow;
        const double tput = raw[o + 0];
        const double rtt = raw[o + 1];
        const double cwnd = raw[o + 2];
        const double bw = raw[o + 3];
        const double base = raw[o + 4];
        const double expflag = raw[o + 5];
        // Ratios for the local operating point plus absolute (log)
        // scales; without the absolutes every rung of a window climb
        // aliases to the same state.
        out[o + 0] = bw > 0.0 ? tput / bw : 0.0;
        out[o + 1] = (base > 0.0 && rtt > 0.0) ? rtt / base - 1.0 : 0.0;
        out[o + 2] = std::log10(1.0 + cwnd) / 3.0;
        out[o + 3] = std::log10(1.0 + bw / 1e6) / 5.0;
        out[o + 4] = std::log10(1.0 + base * 1e3) / 2.0;
        out[o + 5] = expflag;
    }
    return out;
}

DtqnAgent::DtqnAgent(AgentConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      online_(cfg.net, derive_seed(seed, 1)),
      target_(cfg.net, derive_seed(seed, 1)),
      replay_(cfg.replay_capacity),
      lr_(cfg.lr_init) {
    target_.copy_from(online_);
}

double DtqnAgent::epsilon_at(std::int64_t train_step) const {
    const double anneal =
        cfg_.eps_fraction * static_cast<double>(cfg_.planned_train_steps);
    if (anneal <= 0.0) return cfg_.eps_end;
    const double frac = std::min(1.0, static_cast<double>(train_step) / anneal);
    return cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
}

Tensor DtqnAgent::window_features(const std::vector<const std::vector<double>*>& obs,
                                  int* valid_from) const {
    const int len = cfg_.net.use_transformer ? cfg_.net.context_len : 1;
    const int dim = cfg_.net.obs_dim();
    Tensor out(len, dim);
    const int n = std::min<int>(len, static_cast<int>(obs.size()));
    const int pad = len - n;
    if (valid_from != nullptr) *valid_from = pad;
    for (int k = 0; k < n; ++k) {
        // Keep the most recent `len` observations, oldest first.
        const std::vector<double>& raw = *obs[obs.size() - n + k];
        const std::vector<double> f =
            featurize_observation(raw, cfg_.net.subflows, cfg_.cwnd_max);
        for (int j = 0; j < dim; ++j) out(pad + k, j) = f[static_cast<std::size_t>(j)];
    }
    return out;
}

int DtqnAgent::act(const Context& ctx, double epsilon, Rng& rng) const {
    if (epsilon > 0.0 && rng.uniform01() < epsilon)
        return static_cast<int>(rng.uniform_int(cfg_.net.actions));
    std::vector<std::vector<double>> raws;
    raws.reserve(static_cast<std::size_t>(ctx.valid()));
    std::vector<const std::vector<double>*> ptrs;
    for (int i = 0; i < ctx.valid(); ++i) raws.push_back(ctx.at(i).flatten());
    for (const auto& r : raws) ptrs.push_back(&r);
    int vf = 0;
    const Tensor feats = window_features(ptrs, &vf);
    const Tensor q = online_.q_values(feats, 1, {vf});
    const int last = q.rows - 1;
    int best = 0;
    for (int a = 1; a < q.cols; ++a)
        if (q(last, a) > q(last, best)) best = a;
    return best;
}

DtqnAgent::BatchTensors DtqnAgent::assemble(
    const std::vector<ReplayBuffer::Window>& windows, bool next_side) const {
    const int len = cfg_.net.use_transformer ? cfg_.net.context_len : 1;
    const int dim = cfg_.net.obs_dim();
    BatchTensors out;
    out.batch = static_cast<int>(windows.size());
    out.features = Tensor(out.batch * len, dim);
    out.valid_from.assign(static_cast<std::size_t>(out.batch), 0);
    const std::size_t total = static_cast<std::size_t>(out.batch) * len;
    out.actions.assign(total, 0);
    out.rewards.assign(total, 0.0);
    out.dones.assign(total, 0.0);
    out.mask.assign(total, 0.0);
    for (int b = 0; b < out.batch; ++b) {
        const ReplayBuffer::Window& w = windows[static_cast<std::size_t>(b)];
        const int n = std::min<int>(len, static_cast<int>(w.size()));
        const int pad = len - n;
        out.valid_from[static_cast<std::size_t>(b)] = pad;
        for (int k = 0; k < n; ++k) {
            const Transition& tr = *w[w.size() - n + k];
            const std::vector<double>& raw = next_side ? tr.next_obs : tr.obs;
            const std::vector<double> f =
                featurize_observation(raw, cfg_.net.subflows, cfg_.cwnd_max);
            const int row = b * len + pad + k;
            for (int j = 0; j < dim; ++j)
                out.features(row, j) = f[static_cast<std::size_t>(j)];
            const std::size_t flat = static_cast<std::size_t>(row);
            out.actions[flat] = tr.action;
            out.rewards[flat] = tr.reward;
            out.dones[flat] = tr.done ? 1.0 : 0.0;
            out.mask[flat] = 1.0;
        }
    }
    return out;
}

std::vector<double> DtqnAgent::td_targets(const BatchTensors& next_batch,
                                          double gamma) const {
    const Tensor q_online =
        online_.q_values(next_batch.features, next_batch.batch, next_batch.valid_from);
    const Tensor q_target =
        target_.q_values(next_batch.features, next_batch.batch, next_batch.valid_from);
    std::vector<double> y(next_batch.rewards.size(), 0.0);
    for (int row = 0; row < q_online.rows; ++row) {
        const std::size_t i = static_cast<std::size_t>(row);
        if (next_batch.mask[i] == 0.0) continue;
        y[i] = double_dqn_backup(
            std::span<const double>(q_online.row(row), static_cast<std::size_t>(q_online.cols)),
            std::span<const double>(q_target.row(row), static_cast<std::size_t>(q_target.cols)),
            next_batch.rewards[i], next_batch.dones[i] != 0.0, gamma);
    }
    return y;
}

TrainMetrics DtqnAgent::train_step(Rng& rng) {
    TrainMetrics m;
    m.step = train_steps_;
    m.lr = lr_;
    const int len = cfg_.net.use_transformer ? cfg_.net.context_len : 1;
    if (replay_.size() < static_cast<std::size_t>(cfg_.batch * len)) {
        m.skipped = true;
        return m;
    }

    const auto windows = replay_.sample(cfg_.batch, len, rng);
    // Current-side batch drives the loss; the next-side batch (same
    // windows shifted through next_obs) drives the targets.
    const BatchTensors cur = assemble(windows, false);
    const BatchTensors next = assemble(windows, true);
    const std::vector<double> y = td_targets(next, cfg_.gamma);

    double mask_total = 0.0;
    for (double v : cur.mask) mask_total += v;

    auto params = online_.params();
    for (nn::Param* p : params) p->zero_grad();

    Tape t;
    Tape::Var q = online_.forward(t, cur.features, cur.batch, cur.valid_from);
    Tape::Var q_sa = t.select_per_row(q, cur.actions);
    Tape::Var y_var = t.input(Tensor(static_cast<int>(y.size()), 1,
                                     std::vector<double>(y.begin(), y.end())));
    Tape::Var diff = t.sub(q_sa, y_var);
    Tape::Var sq = t.hadamard(diff, diff);
    Tape::Var masked = t.hadamard(
        sq, t.input(Tensor(static_cast<int>(cur.mask.size()), 1,
                           std::vector<double>(cur.mask.begin(), cur.mask.end()))));
    Tape::Var loss = t.scale(t.sum_all(masked), 1.0 / mask_total);
    m.loss = t.value(loss)(0, 0);
    t.backward(loss);
    adam_.step(params, lr_);

    ++train_steps_;
    if (train_steps_ % cfg_.lr_decay_every == 0)
        lr_ = std::max(cfg_.lr_min, lr_ * cfg_.lr_decay);
    if (train_steps_ % cfg_.target_sync_every == 0) {
        sync_target();
        m.target_synced = true;
    }
    m.lr = lr_;
    return m;
}

void DtqnAgent::save(const std::string& path) const {
    auto params = const_cast<DtqnAgent*>(this)->online_.params();
    nn::save_checkpoint(path, params);
}

void DtqnAgent::load(const std::string& path) {
    auto params = online_.params();
    nn::load_checkpoint(path, params);
    target_.copy_from(online_);
}

}  // namespace tcco
