#include "tcco/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcco {

PomdpEnv::PomdpEnv(SimFactory factory, EnvConfig cfg)
    : factory_(std::move(factory)), cfg_(cfg), context_(cfg.context_len) {}

double PomdpEnv::d_f(std::size_t i) const {
    if (i < cfg_.d_f_s.size() && cfg_.d_f_s[i] > 0.0) return cfg_.d_f_s[i];
    return bundle_->base_rtt_s[i];
}

Observation PomdpEnv::snapshot_to_obs(const EngineSnapshot& snap) const {
    return observation_from_snapshot(snap, ns_to_seconds(cfg_.cp.window));
}

void PomdpEnv::advance_to_next_snapshot() {
    const TimeNs horizon = bundle_->net->now() + 20 * cfg_.cp.window +
                           4 * cfg_.cp.proxy_engine_delay + 1'000'000'000;
    const bool got = bundle_->net->clock().advance_until(
        horizon, [this] { return !inbox_.empty(); });
    if (!got) throw std::runtime_error("env: no observation reached the engine");
}

const Observation& PomdpEnv::reset(std::uint64_t seed) {
    bundle_ = factory_(derive_seed(seed, 0xE0 + static_cast<std::uint64_t>(episode_)));
    ++episode_;
    inbox_.clear();
    cp_ = std::make_unique<ControlPlane>(*bundle_->net, *bundle_->conn, cfg_.cp);
    cp_->set_engine([this](const EngineSnapshot& snap) { inbox_.push_back(snap); });
    bundle_->conn->start();
    for (auto& c : bundle_->competitors) c->start();
    cp_->start();

    // Warm up: run until every subflow has handed control to the agent
    // (or a short sized flow finished inside its start phase), then take
    // the next fresh snapshot as the first observation. Snapshots that
    // closed before the handoff are stale and dropped.
    const bool ready = bundle_->net->clock().advance_until(cfg_.warmup_limit, [this] {
        return bundle_->conn->all_handed_off() || bundle_->conn->flow_complete();
    });
    if (!ready) throw std::runtime_error("env: subflows never reached handoff");
    inbox_.clear();
    const bool have_obs = bundle_->net->clock().advance_until(
        bundle_->net->now() + 4 * cfg_.cp.window + 4 * cfg_.cp.proxy_engine_delay,
        [this] { return !inbox_.empty(); });
    if (!have_obs) throw std::runtime_error("env: no observation after handoff");

    const std::size_t m = bundle_->conn->subflow_count();
    loss_seen_.assign(m, 0);
    delivered_seen_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        loss_seen_[i] = bundle_->conn->loss_events(i);
        delivered_seen_[i] = bundle_->conn->delivered_app_bytes(i);
    }
    last_obs_ = snapshot_to_obs(inbox_.front());
    inbox_.pop_front();
    context_.clear();
    context_.push(last_obs_);
    collect_window_stats();
    step_count_ = 0;
    return last_obs_;
}

void PomdpEnv::collect_window_stats() {
    const std::size_t m = bundle_->conn->subflow_count();
    window_stats_.goodput_bps.assign(m, 0.0);
    window_stats_.rtt_ms.assign(m, 0.0);
    window_stats_.cwnd.assign(m, 0.0);
    window_stats_.loss_events.assign(m, 0);
    window_stats_.time_s = ns_to_seconds(bundle_->net->now());
    const double window_s = ns_to_seconds(cfg_.cp.window);
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t delivered = bundle_->conn->delivered_app_bytes(i);
        window_stats_.goodput_bps[i] =
            static_cast<double>(delivered - delivered_seen_[i]) * 8.0 / window_s;
        delivered_seen_[i] = delivered;
        const std::int64_t losses = bundle_->conn->loss_events(i);
        window_stats_.loss_events[i] = losses - loss_seen_[i];
        loss_seen_[i] = losses;
        window_stats_.rtt_ms[i] = last_obs_.subflows[i].rtt_smoothed_s * 1e3;
        window_stats_.cwnd[i] = last_obs_.subflows[i].cwnd;
    }
}

PomdpEnv::StepResult PomdpEnv::step(int action_index) {
    if (bundle_ == nullptr) throw std::logic_error("env: step before reset");
    const std::vector<int> deltas = cfg_.actions.decode(action_index);
    const std::size_t m = bundle_->conn->subflow_count();
    std::vector<double> targets(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double cur = last_obs_.subflows[i].cwnd;
        const double want = cur + cfg_.actions.cwnd_delta(deltas[i]);
        targets[i] = std::clamp(want, cfg_.reward.cwnd_min, cfg_.reward.cwnd_max);
    }
    return do_step(deltas, targets);
}

PomdpEnv::StepResult PomdpEnv::step_with_targets(const std::vector<double>& raw) {
    if (bundle_ == nullptr) throw std::logic_error("env: step before reset");
    const std::size_t m = bundle_->conn->subflow_count();
    std::vector<int> deltas(m, 0);
    std::vector<double> targets(m);
    for (std::size_t i = 0; i < m; ++i) {
        targets[i] = std::clamp(raw[i], cfg_.reward.cwnd_min, cfg_.reward.cwnd_max);
        const double step_pkts = std::max(1, cfg_.actions.scale_pkts);
        deltas[i] = static_cast<int>(
            std::lround((targets[i] - last_obs_.subflows[i].cwnd) / step_pkts));
    }
    return do_step(deltas, targets);
}

PomdpEnv::StepResult PomdpEnv::do_step(const std::vector<int>& deltas,
                                       const std::vector<double>& targets) {
    const std::size_t m = bundle_->conn->subflow_count();
    std::vector<double> post(m);
    for (std::size_t i = 0; i < m; ++i) post[i] = targets[i];
    cp_->send_directive(targets);
    advance_to_next_snapshot();

    const EngineSnapshot snap = inbox_.front();
    inbox_.pop_front();

    StepResult out;
    out.obs = snapshot_to_obs(snap);
    out.components.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.components[i] =
            subflow_reward(out.obs.subflows[i], deltas[i], post[i], cfg_.reward, d_f(i));
    }
    out.reward = total_reward(out.components);

    last_obs_ = out.obs;
    context_.push(out.obs);
    collect_window_stats();
    ++step_count_;
    out.done = step_count_ >= cfg_.horizon_steps;
    return out;
}

}  // namespace tcco
