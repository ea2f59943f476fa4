#include "tcco/control_plane.hpp"

#include <cmath>

namespace tcco {

Observation observation_from_snapshot(const EngineSnapshot& snap, double window_s) {
    Observation obs;
    obs.subflows.resize(snap.subflows.size());
    for (std::size_t i = 0; i < snap.subflows.size(); ++i) {
        const MetricFrame& f = snap.subflows[i].metric;
        SubflowObservation& o = obs.subflows[i];
        o.tput_smoothed_bps = static_cast<double>(f.delivered_bytes) * 8.0 / window_s;
        o.rtt_smoothed_s = f.rtt_n > 0
                               ? static_cast<double>(f.rtt_sum_us) / f.rtt_n * 1e-6
                               : static_cast<double>(f.rtt_us) * 1e-6;
        o.cwnd = f.cwnd;
        o.bw_estimate_bps = static_cast<double>(f.bw_estimate_bps);
        o.base_rtt_s = static_cast<double>(f.min_rtt_us) * 1e-6;
        o.expflag = f.expflag;
        o.stale = f.stale;
    }
    return obs;
}

bool proxy_should_invoke(InvocationMode mode, const std::vector<bool>& reported,
                         const std::vector<bool>& active) {
    if (mode == InvocationMode::kEveryWindow) return true;
    for (std::size_t i = 0; i < reported.size(); ++i) {
        if (active[i] && !reported[i]) return false;
    }
    return true;
}

ControlPlane::ControlPlane(Network& net, Connection& conn, ControlPlaneConfig cfg)
    : net_(net), conn_(conn), cfg_(cfg) {
    const std::size_t m = conn_.subflow_count();
    clients_.resize(m);
    for (auto& c : clients_) c.expflag = ExpflagTracker(cfg_.expflag_period);
    proxy_.delivered.assign(m, 0);
    proxy_.rtt_sum_us.assign(m, 0);
    proxy_.rtt_n.assign(m, 0);
    proxy_.last_frame.resize(m);
    proxy_.reported.assign(m, false);
    proxy_.silent_windows.assign(m, 0);
    proxy_.has_any.assign(m, false);
    proxy_.last_good.resize(m);

    for (std::size_t i = 0; i < m; ++i) {
        client_to_proxy_.push_back(
            std::make_unique<FrameChannel>(net_.clock(), cfg_.client_proxy_delay));
        proxy_to_client_.push_back(
            std::make_unique<FrameChannel>(net_.clock(), cfg_.client_proxy_delay));
        client_to_proxy_[i]->set_receiver(
            [this](const std::string& line) { proxy_receive(line); });
        proxy_to_client_[i]->set_receiver(
            [this, i](const std::string& line) { client_receive(i, line); });
    }
    proxy_to_engine_ =
        std::make_unique<FrameChannel>(net_.clock(), cfg_.proxy_engine_delay);
    engine_to_proxy_ =
        std::make_unique<FrameChannel>(net_.clock(), cfg_.proxy_engine_delay);
    proxy_to_engine_->set_receiver(
        [this](const std::string& line) { engine_receive(line); });
    engine_to_proxy_->set_receiver([this](const std::string& line) {
        // Directives flow engine -> proxy -> demux to clients.
        auto decoded = decode_frame(line);
        if (!decoded) {
            ++frames_skipped_;
            return;
        }
        const auto* d = std::get_if<DirectiveFrame>(&*decoded);
        if (d == nullptr || d->conn_id != conn_.conn_id()) {
            ++frames_skipped_;
            return;
        }
        if (d->decision_seq <= proxy_.last_applied_decision) return;  // stale
        proxy_.last_applied_decision = d->decision_seq;
        for (std::size_t i = 0; i < proxy_to_client_.size() && i < d->target_cwnd.size();
             ++i) {
            DirectiveFrame one;
            one.conn_id = d->conn_id;
            one.decision_seq = d->decision_seq;
            one.subflow_id = static_cast<int>(i);
            one.target_cwnd = {d->target_cwnd[i]};
            proxy_to_client_[i]->send(encode_frame(one));
        }
    });

    conn_.set_ack_report_hook([this](const AckReport& r) {
        ClientState& c = clients_[static_cast<std::size_t>(r.subflow_id)];
        c.delivered += r.delivered_bytes;
        if (r.rtt_sample > 0.0) {
            c.rtt_sum_s += r.rtt_sample;
            ++c.rtt_n;
        }
        c.cwnd_max = std::max(c.cwnd_max, r.cwnd);
        ++c.acks;
    });
}

void ControlPlane::start() {
    // Mid-window client flushes ride their own cadence; the window
    // boundary flushes every client and only then (one event later, so
    // the zero-delay frame deliveries land in between) closes the proxy
    // window. No simulated time is added in local mode.
    const TimeNs flush_gap = cfg_.window / std::max(1, cfg_.flushes_per_window);
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        struct Flush {
            ControlPlane* cp;
            std::size_t idx;
            TimeNs gap;
            void operator()() const {
                if (cp->net_.now() % cp->cfg_.window != 0) cp->client_flush(idx, false);
                cp->net_.clock().schedule_in(gap, "client_flush", Flush{cp, idx, gap});
            }
        };
        net_.clock().schedule_in(flush_gap, "client_flush", Flush{this, i, flush_gap});
    }
    struct Boundary {
        ControlPlane* cp;
        void operator()() const {
            for (std::size_t i = 0; i < cp->clients_.size(); ++i) cp->client_flush(i, true);
            cp->net_.clock().schedule_in(0, "proxy_window",
                                         [cp = cp] { cp->proxy_window_close(); });
            cp->net_.clock().schedule_in(cp->cfg_.window, "cp_boundary", Boundary{cp});
        }
    };
    net_.clock().schedule_in(cfg_.window, "cp_boundary", Boundary{this});
}

void ControlPlane::client_flush(std::size_t idx, bool window_end) {
    ClientState& c = clients_[idx];
    const SubflowState& st = conn_.state(idx);

    // Reported window = the client's enforced operating point: transient
    // recovery dips are smoothed away (they repair within the window at
    // one packet per ACK), while deliberate directive decreases show
    // through immediately via the target cap.
    double cwnd = std::max(st.cwnd, c.cwnd_max);
    const double target = conn_.directive_target(idx);
    if (target >= 0.0) cwnd = std::min(cwnd, target);

    if (window_end) {
        // Window-end snapshot feeds the exploration-flag history.
        c.expflag.push(cwnd);
        c.flag = c.expflag.flag();
    }
    if (c.acks == 0 && !window_end) return;  // nothing new mid-window

    MetricFrame m;
    m.conn_id = conn_.conn_id();
    m.subflow_id = static_cast<int>(idx);
    m.seq = c.frame_seq++;
    m.timestamp_us = net_.now() / 1000;
    m.delivered_bytes = c.delivered;
    m.rtt_n = c.rtt_n;
    m.rtt_sum_us = static_cast<std::int64_t>(std::llround(c.rtt_sum_s * 1e6));
    m.rtt_us = c.rtt_n > 0 ? m.rtt_sum_us / c.rtt_n : 0;
    m.cwnd = cwnd;
    m.min_rtt_us = static_cast<std::int64_t>(std::llround(st.min_rtt * 1e6));
    m.bw_estimate_bps = static_cast<std::int64_t>(st.max_delivery_rate);
    m.mode = to_string(st.mode);
    m.expflag = c.flag;
    client_to_proxy_[idx]->send(encode_frame(m));

    c.delivered = 0;
    c.rtt_sum_s = 0.0;
    c.rtt_n = 0;
    c.acks = 0;
    c.cwnd_max = 0.0;
}

void ControlPlane::proxy_receive(const std::string& line) {
    auto decoded = decode_frame(line);
    if (!decoded) {
        ++frames_skipped_;
        return;
    }
    const auto* m = std::get_if<MetricFrame>(&*decoded);
    if (m == nullptr || m->conn_id != conn_.conn_id()) {
        ++frames_skipped_;
        return;
    }
    const std::size_t i = static_cast<std::size_t>(m->subflow_id);
    if (i >= proxy_.delivered.size()) {
        ++frames_skipped_;
        return;
    }
    proxy_.delivered[i] += m->delivered_bytes;
    proxy_.rtt_sum_us[i] += m->rtt_sum_us;
    proxy_.rtt_n[i] += m->rtt_n;
    proxy_.last_frame[i] = *m;
    proxy_.reported[i] = true;
}

void ControlPlane::proxy_window_close() {
    const std::size_t m = clients_.size();
    std::vector<bool> active(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (proxy_.reported[i]) {
            proxy_.silent_windows[i] = 0;
        } else {
            ++proxy_.silent_windows[i];
        }
        active[i] = proxy_.silent_windows[i] < cfg_.inactive_after_windows;
    }
    const bool invoke = proxy_should_invoke(cfg_.mode, proxy_.reported, active);
    if (invoke) {
        ++proxy_.window_seq;
        ++invocations_;
        for (std::size_t i = 0; i < m; ++i) {
            MetricFrame out;
            const bool fresh = proxy_.reported[i] && proxy_.rtt_n[i] + proxy_.delivered[i] > 0;
            if (fresh) {
                out = proxy_.last_frame[i];
                out.delivered_bytes = proxy_.delivered[i];
                out.rtt_sum_us = proxy_.rtt_sum_us[i];
                out.rtt_n = proxy_.rtt_n[i];
                out.rtt_us =
                    proxy_.rtt_n[i] > 0 ? proxy_.rtt_sum_us[i] / proxy_.rtt_n[i] : 0;
                out.stale = false;
                proxy_.last_good[i] = out;
                proxy_.has_any[i] = true;
            } else {
                // Carry the previous composite forward, flagged stale.
                out = proxy_.has_any[i] ? proxy_.last_good[i] : MetricFrame{};
                out.conn_id = conn_.conn_id();
                out.subflow_id = static_cast<int>(i);
                out.stale = true;
            }
            out.seq = proxy_.window_seq;
            out.timestamp_us = net_.now() / 1000;
            out.batch = static_cast<int>(m);
            proxy_to_engine_->send(encode_frame(out));
        }
        for (std::size_t i = 0; i < m; ++i) {
            proxy_.delivered[i] = 0;
            proxy_.rtt_sum_us[i] = 0;
            proxy_.rtt_n[i] = 0;
        }
    }
    for (std::size_t i = 0; i < m; ++i) proxy_.reported[i] = false;
}

void ControlPlane::engine_receive(const std::string& line) {
    auto decoded = decode_frame(line);
    if (!decoded) {
        ++frames_skipped_;
        return;
    }
    const auto* m = std::get_if<MetricFrame>(&*decoded);
    if (m == nullptr) {
        ++frames_skipped_;
        return;
    }
    auto& batch = engine_inbox_[m->seq];
    batch.push_back(*m);
    if (m->batch > 0 && static_cast<int>(batch.size()) == m->batch) {
        EngineSnapshot snap;
        snap.window_seq = m->seq;
        snap.engine_time = net_.now();
        snap.subflows.resize(batch.size());
        for (const MetricFrame& f : batch) {
            const std::size_t i = static_cast<std::size_t>(f.subflow_id);
            if (i < snap.subflows.size()) snap.subflows[i] = {f, !f.stale};
        }
        engine_inbox_.erase(m->seq);
        if (engine_fn_) engine_fn_(snap);
    }
}

void ControlPlane::send_directive(const std::vector<double>& targets) {
    DirectiveFrame d;
    d.conn_id = conn_.conn_id();
    d.decision_seq = ++decision_seq_;
    d.target_cwnd = targets;
    engine_to_proxy_->send(encode_frame(d));
}

void ControlPlane::client_receive(std::size_t idx, const std::string& line) {
    auto decoded = decode_frame(line);
    if (!decoded) {
        ++frames_skipped_;
        return;
    }
    const auto* d = std::get_if<DirectiveFrame>(&*decoded);
    if (d == nullptr || d->target_cwnd.empty()) {
        ++frames_skipped_;
        return;
    }
    conn_.apply_directive(static_cast<int>(idx), d->target_cwnd[0], d->decision_seq);
}

}  // namespace tcco
