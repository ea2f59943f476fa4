#include "tcco/connection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcco {

namespace {
constexpr TimeNs kInitialRto = 200'000'000;   // 200 ms before any RTT sample
constexpr TimeNs kMinRto = 20'000'000;        // 20 ms floor
constexpr TimeNs kLifecycleCheckPeriod = 500'000'000;
constexpr TimeNs kFallbackProbeDuration = 50'000'000;
}  // namespace

const char* to_string(CcAlgorithm a) {
    switch (a) {
        case CcAlgorithm::kTcco: return "tcco";
        case CcAlgorithm::kTccoNoTransformer: return "tcco_no_transformer";
        case CcAlgorithm::kReno: return "reno";
        case CcAlgorithm::kCubic: return "cubic";
        case CcAlgorithm::kLia: return "lia";
        case CcAlgorithm::kFixedCwnd: return "fixed_cwnd";
    }
    return "?";
}

std::optional<CcAlgorithm> algorithm_from_string(std::string_view s) {
    if (s == "tcco") return CcAlgorithm::kTcco;
    if (s == "tcco_no_transformer") return CcAlgorithm::kTccoNoTransformer;
    if (s == "reno") return CcAlgorithm::kReno;
    if (s == "cubic") return CcAlgorithm::kCubic;
    if (s == "lia") return CcAlgorithm::kLia;
    if (s == "fixed_cwnd") return CcAlgorithm::kFixedCwnd;
    return std::nullopt;
}

Connection::Connection(Network& net, ConnectionConfig cfg)
    : net_(net), cfg_(std::move(cfg)), alloc_stats_(cfg_.routes.size()) {
    if (cfg_.routes.empty()) throw std::invalid_argument("connection: no routes");
    subs_.resize(cfg_.routes.size());
    lia_.cwnd.assign(subs_.size(), cfg_.initial_cwnd);
    lia_.ssthresh.assign(subs_.size(), 1e9);
    for (std::size_t i = 0; i < subs_.size(); ++i) {
        Sub& sub = subs_[i];
        sub.st.subflow_id = static_cast<int>(i);
        sub.route = cfg_.routes[i];
        sub.st.cwnd = cfg_.initial_cwnd;
        switch (cfg_.algo) {
            case CcAlgorithm::kTcco:
            case CcAlgorithm::kTccoNoTransformer:
                sub.st.mode = SubflowMode::kStart;
                break;
            case CcAlgorithm::kFixedCwnd:
                sub.st.mode = SubflowMode::kNormal;
                sub.st.cwnd = cfg_.fixed_cwnd.empty()
                                  ? cfg_.initial_cwnd
                                  : cfg_.fixed_cwnd[i % cfg_.fixed_cwnd.size()];
                sub.forced = true;
                sub.handed_off = true;
                break;
            default:
                sub.st.mode = SubflowMode::kNormal;
                sub.handed_off = true;
                break;
        }
        sub.reno.cwnd = sub.st.cwnd;
        sub.cubic.cwnd = sub.st.cwnd;
    }
    net_.set_receiver(cfg_.conn_id,
                      [this](const Packet& p, TimeNs t) { on_data_arrival(p, t); });
}

void Connection::start() {
    net_.clock().schedule(cfg_.start_at, "conn_start", [this] {
        if (cfg_.app_rate_bps > 0.0) {
            const TimeNs gap = seconds_to_ns(kMtuBytes * 8.0 / cfg_.app_rate_bps);
            // Recurring app arrival; one packet per interval.
            struct Recur {
                Connection* c;
                TimeNs gap;
                void operator()() const {
                    c->app_backlog_pkts_ += 1;
                    c->pump();
                    c->net_.clock().schedule_in(gap, "app_arrival", Recur{c, gap});
                }
            };
            net_.clock().schedule_in(0, "app_arrival", Recur{this, gap});
        } else {
            pump();
        }
        if (is_agent_algorithm(cfg_.algo)) {
            struct Check {
                Connection* c;
                void operator()() const {
                    c->lifecycle_check();
                    c->net_.clock().schedule_in(kLifecycleCheckPeriod, "lifecycle", Check{c});
                }
            };
            net_.clock().schedule_in(kLifecycleCheckPeriod, "lifecycle", Check{this});
        }
    });
}

bool Connection::can_assign() const {
    if (cfg_.flow_size_bytes > 0 && bytes_assigned_ >= cfg_.flow_size_bytes) return false;
    if (cfg_.app_rate_bps > 0.0 && app_backlog_pkts_ <= 0) return false;
    return true;
}

void Connection::pump() {
    while (can_assign()) {
        // Eq. 1/2 selection over live states.
        const Sub* best = nullptr;
        for (const Sub& s : subs_) {
            if (!availability(s.st)) continue;
            if (best == nullptr || s.st.srtt < best->st.srtt) best = &s;
        }
        if (best == nullptr) break;
        Sub& sub = subs_[static_cast<std::size_t>(best->st.subflow_id)];
        alloc_stats_.record(static_cast<std::size_t>(sub.st.subflow_id));
        bytes_assigned_ += kMtuBytes;
        if (cfg_.app_rate_bps > 0.0) --app_backlog_pkts_;
        if (first_send_time_ < 0) first_send_time_ = net_.now();
        transmit(sub, sub.next_seq++, kMtuBytes, false);
        if (sub.st.mode == SubflowMode::kStart && sub.round_end_seq <= sub.cum_acked)
            sub.round_end_seq = sub.next_seq;
    }
}

void Connection::transmit(Sub& sub, std::int64_t seq, std::int64_t bytes, bool retx) {
    const TimeNs now = net_.now();
    if (!retx) {
        OutstandingPkt pkt;
        pkt.bytes = bytes;
        pkt.sent = now;
        pkt.retx = false;
        pkt.delivered_at_send = sub.st.delivered_bytes;
        sub.outstanding[seq] = pkt;
        sub.st.in_flight += 1;
    } else {
        auto it = sub.outstanding.find(seq);
        if (it == sub.outstanding.end()) return;  // already acked, nothing to repair
        it->second.retx = true;
        sub.retransmits += 1;
    }
    Packet pkt;
    pkt.conn_id = cfg_.conn_id;
    pkt.subflow_id = sub.st.subflow_id;
    pkt.seq = seq;
    pkt.bytes = bytes;
    pkt.retransmit = retx || sub.outstanding[seq].retx;
    pkt.sent_time = now;
    pkt.route = sub.route;
    net_.send(std::move(pkt));
    // Ensure a timer is pending, but never push an armed deadline: the
    // timer guards the oldest outstanding packet and only progress
    // (cumulative advance) restarts it.
    if (!sub.rto_pending) arm_rto(sub);
}

void Connection::on_data_arrival(const Packet& pkt, TimeNs now) {
    Sub& sub = subs_[static_cast<std::size_t>(pkt.subflow_id)];
    if (pkt.seq == sub.rcv_next) {
        ++sub.rcv_next;
        while (!sub.rcv_ooo.empty() && *sub.rcv_ooo.begin() == sub.rcv_next) {
            sub.rcv_ooo.erase(sub.rcv_ooo.begin());
            ++sub.rcv_next;
        }
    } else if (pkt.seq > sub.rcv_next) {
        sub.rcv_ooo.insert(pkt.seq);
    }
    // Pure ACK on the reverse path: no loss, no queueing.
    const TimeNs back = net_.reverse_prop_delay(sub.route, now);
    const std::size_t idx = static_cast<std::size_t>(pkt.subflow_id);
    const std::int64_t cum = sub.rcv_next;
    const std::int64_t echo_seq = pkt.seq;
    const TimeNs echo_sent = pkt.sent_time;
    const bool echo_retx = pkt.retransmit;
    net_.clock().schedule(now + back, "ack", [this, idx, cum, echo_seq, echo_sent, echo_retx] {
        handle_ack(idx, cum, echo_seq, echo_sent, echo_retx, net_.now());
    });
}

void Connection::handle_ack(std::size_t idx, std::int64_t cum, std::int64_t echo_seq,
                            TimeNs echo_sent, bool echo_retx, TimeNs now) {
    Sub& sub = subs_[idx];
    double rtt_sample = 0.0;

    if (!echo_retx) {
        rtt_sample = ns_to_seconds(now - echo_sent);
        sub.st.last_rtt = rtt_sample;
        sub.st.srtt = srtt_update(sub.st.srtt, rtt_sample);
        const double err = std::abs(rtt_sample - sub.st.srtt);
        sub.rttvar = sub.rttvar <= 0.0 ? err / 2.0 : sub.rttvar + (err - sub.rttvar) / 4.0;
        // Samples at (or under) the believed floor confirm it and defer
        // the next probe; only a probe can move the floor back up.
        if (sub.st.mode == SubflowMode::kStart || sub.rtt_floor <= 0.0 ||
            rtt_sample <= sub.rtt_floor + 100e-6) {
            sub.rtt_floor = sub.rtt_floor <= 0.0 ? rtt_sample
                                                 : std::min(sub.rtt_floor, rtt_sample);
            sub.floor_ref_t = now;
            sub.lifecycle_extended = false;
        }
        if (sub.probe_active) {
            sub.probe_sample_seen = true;
            sub.probe_min =
                sub.probe_min <= 0.0 ? rtt_sample : std::min(sub.probe_min, rtt_sample);
        }
    }
    sub.st.min_rtt = sub.rtt_floor;

    // Per-packet delivery confirmation: the echoed sequence leaves the
    // pipe immediately even when the cumulative ACK is stuck behind a
    // hole, so repairs never freeze the window.
    {
        auto echo_it = sub.outstanding.find(echo_seq);
        if (echo_it != sub.outstanding.end() && !echo_it->second.delivered_ooo) {
            echo_it->second.delivered_ooo = true;
            if (sub.st.in_flight <= 0)
                throw std::logic_error("connection: acked more than in flight");
            sub.st.in_flight -= 1;
        }
    }

    const std::int64_t newly = cum - sub.cum_acked;
    if (newly > 0) {
        // Delivery-rate sample from the echoed packet's send snapshot.
        auto echo_it = sub.outstanding.find(echo_seq);
        double bw_sample = 0.0;
        if (echo_it != sub.outstanding.end() && !echo_it->second.retx &&
            now > echo_it->second.sent) {
            const double bytes_delta = static_cast<double>(
                sub.st.delivered_bytes + newly * kMtuBytes - echo_it->second.delivered_at_send);
            bw_sample = bytes_delta * 8.0 / ns_to_seconds(now - echo_it->second.sent);
        }

        for (std::int64_t s = sub.cum_acked; s < cum; ++s) {
            auto it = sub.outstanding.find(s);
            if (it != sub.outstanding.end()) {
                if (!it->second.delivered_ooo) {
                    if (sub.st.in_flight <= 0)
                        throw std::logic_error("connection: acked more than in flight");
                    sub.st.in_flight -= 1;
                }
                sub.outstanding.erase(it);
            }
        }
        sub.st.delivered_bytes += newly * kMtuBytes;
        sub.cum_acked = cum;
        sub.dupacks = 0;

        if (bw_sample > 0.0) sub.bw_filter.push(now, bw_sample);
        sub.bw_filter.expire_before(now - seconds_to_ns(cfg_.estimate_ttl_s));
        if (!sub.bw_filter.empty()) sub.st.max_delivery_rate = sub.bw_filter.best();

        if (sub.st.mode == SubflowMode::kRecovery) {
            if (sub.cum_acked >= sub.recover_point) {
                exit_recovery(sub);
            } else {
                retransmit_hole(sub);
            }
        }
        cc_on_ack(sub, newly, now);
        if (sub.st.mode == SubflowMode::kStart) complete_start_round(sub);

        if (sub.outstanding.empty()) {
            sub.rto_deadline = 0;
        } else {
            arm_rto(sub);
        }
        if (cfg_.flow_size_bytes > 0 && flow_complete_time_ < 0 &&
            delivered_app_bytes() >= cfg_.flow_size_bytes) {
            flow_complete_time_ = now;
        }
        emit_report(sub, newly, newly * kMtuBytes, rtt_sample, now);
        pump();
    } else {
        if (!sub.outstanding.empty()) {
            ++sub.dupacks;
            if (sub.dupacks == 3) loss_detected(sub, now, false);
        }
        emit_report(sub, 0, 0, rtt_sample, now);
        pump();  // out-of-order deliveries open window room
    }
}

void Connection::loss_detected(Sub& sub, TimeNs now, bool timeout) {
    sub.round_loss = true;
    if (sub.st.mode == SubflowMode::kRecovery) {
        if (timeout) retransmit_hole(sub);
        return;
    }
    if (is_agent_algorithm(cfg_.algo)) {
        // Modern loss repair: retransmit the hole and keep the window
        // flowing; a timeout retries the same hole (covers a lost
        // retransmit). A classical whole-window freeze per loss would
        // idle the subflow most of the time at high stochastic loss.
        if (timeout || sub.last_fast_retx != sub.cum_acked) {
            sub.last_fast_retx = sub.cum_acked;
            sub.loss_events += 1;
            retransmit_hole(sub);
        }
        sub.dupacks = 0;
        return;
    }
    sub.loss_events += 1;
    if (sub.probe_active) {
        // Abort the probe before reacting so the halving applies to the
        // real operating window, not the probe floor.
        sub.st.cwnd = sub.probe_saved_cwnd;
        sub.probe_active = false;
        ++sub.probe_epoch;
    }
    sub.resume_mode =
        sub.st.mode == SubflowMode::kStart ? SubflowMode::kStart : SubflowMode::kNormal;
    sub.st.mode = SubflowMode::kRecovery;
    sub.recover_point = sub.next_seq;
    cc_on_loss(sub, now);
    retransmit_hole(sub);
    sub.dupacks = 0;
}

void Connection::exit_recovery(Sub& sub) {
    sub.st.mode = sub.resume_mode;
    sub.recover_point = -1;
    if (sub.st.mode == SubflowMode::kStart) {
        // Restart the stability counter after a loss during start.
        sub.clean_rounds = 0;
        sub.round_loss = false;
        sub.round_end_seq = sub.next_seq;
    }
}

void Connection::retransmit_hole(Sub& sub) {
    if (sub.outstanding.empty()) return;
    const std::int64_t hole = sub.cum_acked;
    if (sub.outstanding.count(hole) > 0) transmit(sub, hole, kMtuBytes, true);
}

void Connection::cc_on_ack(Sub& sub, std::int64_t newly, TimeNs now) {
    if (sub.forced) return;
    switch (cfg_.algo) {
        case CcAlgorithm::kTcco:
        case CcAlgorithm::kTccoNoTransformer:
            if (sub.st.mode == SubflowMode::kStart) {
                sub.st.cwnd += static_cast<double>(newly);
            } else if (sub.st.mode == SubflowMode::kNormal && sub.target_cwnd >= 0.0) {
                // Incremental enforcement: one packet per ACK toward the
                // target, which acts as an upper limit.
                if (sub.st.cwnd < sub.target_cwnd) {
                    sub.st.cwnd = std::min(sub.target_cwnd, sub.st.cwnd + 1.0);
                }
            }
            break;
        case CcAlgorithm::kReno:
            reno_on_ack(sub.reno, newly);
            sub.st.cwnd = sub.reno.cwnd;
            break;
        case CcAlgorithm::kCubic:
            cubic_on_ack(sub.cubic, now, newly);
            sub.st.cwnd = sub.cubic.cwnd;
            break;
        case CcAlgorithm::kLia: {
            std::vector<double> rtts(subs_.size());
            bool all_measured = true;
            for (std::size_t k = 0; k < subs_.size(); ++k) {
                rtts[k] = subs_[k].st.srtt;
                if (rtts[k] <= 0.0) all_measured = false;
            }
            const std::size_t i = index_of(sub);
            if (all_measured) {
                lia_on_ack(lia_, rtts, i, newly);
            } else {
                lia_.cwnd[i] += static_cast<double>(newly);  // still in slow start
            }
            sub.st.cwnd = lia_.cwnd[i];
            break;
        }
        case CcAlgorithm::kFixedCwnd:
            break;
    }
}

void Connection::cc_on_loss(Sub& sub, TimeNs now) {
    if (sub.forced) return;
    switch (cfg_.algo) {
        case CcAlgorithm::kTcco:
        case CcAlgorithm::kTccoNoTransformer:
            // Loss recovery repairs the hole and (via the availability
            // indicator) pauses new scheduling, but the window itself
            // stays under directive control: the decision loop sees the
            // throughput/RTT impact and reacts. A multiplicative
            // decrease here would make the controller loss-based and
            // collapse under stochastic loss no matter what the agent
            // does.
            break;
        case CcAlgorithm::kReno:
            reno_on_loss(sub.reno);
            sub.st.cwnd = sub.reno.cwnd;
            break;
        case CcAlgorithm::kCubic:
            cubic_on_loss(sub.cubic, now);
            sub.st.cwnd = sub.cubic.cwnd;
            break;
        case CcAlgorithm::kLia: {
            const std::size_t i = index_of(sub);
            lia_on_loss(lia_, i);
            sub.st.cwnd = lia_.cwnd[i];
            break;
        }
        case CcAlgorithm::kFixedCwnd:
            break;
    }
}

void Connection::complete_start_round(Sub& sub) {
    if (sub.cum_acked < sub.round_end_seq) return;
    if (sub.round_loss) {
        sub.clean_rounds = 0;
    } else {
        sub.clean_rounds += 1;
    }
    sub.round_loss = false;
    sub.round_end_seq = sub.next_seq;
    if (sub.st.cwnd >= cfg_.start_threshold_pkts &&
        sub.clean_rounds >= cfg_.start_stable_rounds && !sub.handed_off) {
        sub.st.mode = SubflowMode::kNormal;
        sub.handed_off = true;
        if (handoff_hook_) handoff_hook_(sub.st.subflow_id);
    }
}

void Connection::arm_rto(Sub& sub) {
    const TimeNs deadline = net_.now() + rto_interval(sub);
    sub.rto_deadline = deadline;
    if (sub.rto_pending) return;
    sub.rto_pending = true;
    const std::size_t idx = index_of(sub);
    net_.clock().schedule(deadline, "rto", [this, idx] { rto_fired(idx); });
}

void Connection::rto_fired(std::size_t idx) {
    Sub& sub = subs_[idx];
    sub.rto_pending = false;
    if (sub.outstanding.empty() || sub.rto_deadline == 0) return;
    const TimeNs now = net_.now();
    if (now < sub.rto_deadline) {
        sub.rto_pending = true;
        net_.clock().schedule(sub.rto_deadline, "rto", [this, idx] { rto_fired(idx); });
        return;
    }
    loss_detected(sub, now, true);
    arm_rto(sub);
}

TimeNs Connection::rto_interval(const Sub& sub) const {
    if (sub.st.srtt <= 0.0) return kInitialRto;
    const TimeNs rto = seconds_to_ns(sub.st.srtt + 4.0 * sub.rttvar) + kMinRto / 2;
    return std::max(rto, kMinRto);
}

void Connection::lifecycle_check() {
    const TimeNs now = net_.now();
    const TimeNs ttl = seconds_to_ns(cfg_.estimate_ttl_s);
    for (Sub& sub : subs_) {
        if (!sub.handed_off || sub.probe_active) continue;
        if (sub.st.mode != SubflowMode::kNormal) continue;
        if (sub.floor_ref_t < 0 || now - sub.floor_ref_t <= ttl) continue;
        begin_probe(sub);
    }
}

void Connection::begin_probe(Sub& sub) {
    sub.probe_active = true;
    sub.probe_sample_seen = false;
    sub.probe_min = 0.0;
    sub.probe_saved_cwnd = sub.st.cwnd;
    sub.st.mode = SubflowMode::kProbe;
    sub.st.cwnd = std::min(sub.st.cwnd, cfg_.probe_cwnd_pkts);
    const TimeNs dur = sub.st.srtt > 0.0
                           ? seconds_to_ns(cfg_.probe_duration_srtt * sub.st.srtt)
                           : kFallbackProbeDuration;
    const std::uint64_t epoch = ++sub.probe_epoch;
    const std::size_t idx = index_of(sub);
    net_.clock().schedule_in(dur, "probe_end", [this, idx, epoch] { end_probe(idx, epoch); });
}

void Connection::end_probe(std::size_t idx, std::uint64_t epoch) {
    Sub& sub = subs_[idx];
    if (!sub.probe_active || sub.probe_epoch != epoch) return;
    sub.probe_active = false;
    sub.st.cwnd = sub.probe_saved_cwnd;
    if (sub.st.mode == SubflowMode::kProbe) sub.st.mode = SubflowMode::kNormal;
    if (sub.probe_sample_seen) {
        // The drained measurement resets the believed floor in either
        // direction (path delay may have risen since the last probe).
        sub.rtt_floor = sub.probe_min;
        sub.st.min_rtt = sub.rtt_floor;
        sub.floor_ref_t = net_.now();
        sub.lifecycle_extended = false;
    } else if (!sub.lifecycle_extended) {
        // No sample during the probe window: keep the previous estimate
        // alive for one extra lifecycle.
        sub.floor_ref_t = net_.now();
        sub.lifecycle_extended = true;
    }
    pump();
}

void Connection::emit_report(Sub& sub, std::int64_t acked, std::int64_t delivered_bytes,
                             double rtt_sample, TimeNs now) {
    if (!report_hook_) return;
    AckReport r;
    r.conn_id = cfg_.conn_id;
    r.subflow_id = sub.st.subflow_id;
    r.t = now;
    r.acked_packets = acked;
    r.delivered_bytes = delivered_bytes;
    r.rtt_sample = rtt_sample;
    r.cwnd = sub.st.cwnd;
    r.srtt = sub.st.srtt;
    r.min_rtt = sub.st.min_rtt;
    r.bw_estimate_bps = sub.st.max_delivery_rate;
    r.mode = sub.st.mode;
    report_hook_(r);
}

bool Connection::apply_directive(int subflow_id, double target_cwnd,
                                 std::int64_t decision_seq) {
    Sub& sub = subs_[static_cast<std::size_t>(subflow_id)];
    if (decision_seq <= sub.last_decision_seq) return false;
    sub.last_decision_seq = decision_seq;
    const double target = std::clamp(target_cwnd, cfg_.cwnd_min, cfg_.cwnd_max);
    sub.target_cwnd = target;
    if (sub.st.mode == SubflowMode::kNormal && !sub.probe_active) {
        // Decreases take effect immediately (the target is an upper
        // limit); increases ramp one packet per ACK.
        if (target < sub.st.cwnd) {
            sub.st.cwnd = target;
        }
    }
    pump();
    return true;
}

bool Connection::all_handed_off() const {
    for (const Sub& s : subs_)
        if (!s.handed_off) return false;
    return true;
}

std::int64_t Connection::delivered_app_bytes() const {
    std::int64_t total = 0;
    for (const Sub& s : subs_) total += s.st.delivered_bytes;
    return total;
}

double Connection::base_rtt_estimate(std::size_t i) const {
    return subs_[i].st.min_rtt;
}

void Connection::force_cwnd(std::size_t i, double cwnd) {
    subs_[i].forced = true;
    subs_[i].st.cwnd = cwnd;
    subs_[i].handed_off = true;
    if (subs_[i].st.mode == SubflowMode::kStart) subs_[i].st.mode = SubflowMode::kNormal;
    pump();
}

std::size_t Connection::index_of(const Sub& sub) const {
    return static_cast<std::size_t>(sub.st.subflow_id);
}

}  // namespace tcco
