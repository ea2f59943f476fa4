#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tcco/baseline.hpp"
#include "tcco/network.hpp"
#include "tcco/subflow.hpp"

namespace tcco {

enum class CcAlgorithm { kTcco, kTccoNoTransformer, kReno, kCubic, kLia, kFixedCwnd };

const char* to_string(CcAlgorithm a);
std::optional<CcAlgorithm> algorithm_from_string(std::string_view s);

inline bool is_agent_algorithm(CcAlgorithm a) {
    return a == CcAlgorithm::kTcco || a == CcAlgorithm::kTccoNoTransformer;
}

struct ConnectionConfig {
    int conn_id = 0;
    CcAlgorithm algo = CcAlgorithm::kTcco;
    std::vector<std::vector<int>> routes;   // one route (list of path ids) per subflow
    std::vector<double> fixed_cwnd;         // per subflow, kFixedCwnd only
    double app_rate_bps = 0.0;              // 0 => saturated source
    std::int64_t flow_size_bytes = 0;       // 0 => unbounded
    TimeNs start_at = 0;

    // In-kernel client lifecycle (agent algorithms).
    double start_threshold_pkts = 16.0;
    int start_stable_rounds = 3;
    double probe_cwnd_pkts = 4.0;
    double probe_duration_srtt = 2.0;
    double estimate_ttl_s = 10.0;
    double cwnd_min = 2.0;
    double cwnd_max = 1e9;
    double initial_cwnd = 2.0;
};

// An MPTCP-style connection: M subflows pinned to routes, a shared
// min-RTT scheduler, per-subflow loss recovery, and either an in-kernel
// client lifecycle (agent algorithms) or a classical controller.
class Connection {
public:
    Connection(Network& net, ConnectionConfig cfg);

    void start();

    int conn_id() const { return cfg_.conn_id; }
    std::size_t subflow_count() const { return subs_.size(); }
    const SubflowState& state(std::size_t i) const { return subs_[i].st; }
    const ConnectionConfig& config() const { return cfg_; }

    // Control-plane surface -------------------------------------------------

    using AckReportFn = std::function<void(const AckReport&)>;
    void set_ack_report_hook(AckReportFn fn) { report_hook_ = std::move(fn); }

    using HandoffFn = std::function<void(int subflow_id)>;
    void set_handoff_hook(HandoffFn fn) { handoff_hook_ = std::move(fn); }

    // Applies a cwnd directive for one subflow. Targets are clamped to
    // [cwnd_min, cwnd_max]; stale decision_seq values are dropped.
    // Returns false when the directive was discarded as stale.
    bool apply_directive(int subflow_id, double target_cwnd, std::int64_t decision_seq);

    bool all_handed_off() const;

    // Metrics surface --------------------------------------------------------

    std::int64_t delivered_app_bytes() const;
    std::int64_t delivered_app_bytes(std::size_t i) const { return subs_[i].st.delivered_bytes; }
    // Active enforcement target for a subflow; negative when none set.
    double directive_target(std::size_t i) const { return subs_[i].target_cwnd; }
    std::int64_t loss_events(std::size_t i) const { return subs_[i].loss_events; }
    std::int64_t retransmits(std::size_t i) const { return subs_[i].retransmits; }
    bool flow_complete() const { return flow_complete_time_ >= 0; }
    TimeNs flow_complete_time() const { return flow_complete_time_; }
    TimeNs first_send_time() const { return first_send_time_; }
    double base_rtt_estimate(std::size_t i) const;

    AllocationStats& alloc_stats() { return alloc_stats_; }

    // Forces a congestion window (test/experiment hook; kFixedCwnd
    // semantics for one subflow from now on).
    void force_cwnd(std::size_t i, double cwnd);

private:
    struct OutstandingPkt {
        std::int64_t bytes;
        TimeNs sent;
        bool retx;
        bool delivered_ooo = false;  // acked out of order, pipe-accounted
        std::int64_t delivered_at_send;
    };

    struct Sub {
        SubflowState st;
        std::vector<int> route;

        // Sender bookkeeping.
        std::int64_t next_seq = 0;
        std::int64_t cum_acked = 0;
        std::map<std::int64_t, OutstandingPkt> outstanding;
        int dupacks = 0;
        std::int64_t recover_point = -1;
        std::int64_t last_fast_retx = -1;
        SubflowMode resume_mode = SubflowMode::kNormal;
        std::int64_t loss_events = 0;
        std::int64_t retransmits = 0;

        // Receiver bookkeeping.
        std::int64_t rcv_next = 0;
        std::set<std::int64_t> rcv_ooo;

        // Estimators. The RTT floor is a believed value: ordinary samples
        // can only confirm or lower it; a probe (drained queue) can reset
        // it in either direction. Its age drives probe scheduling.
        double rttvar = 0.0;
        double rtt_floor = 0.0;     // 0 = no estimate yet
        TimeNs floor_ref_t = -1;    // last confirmation time
        double probe_min = 0.0;     // lowest sample inside the current probe
        WindowedMax bw_filter;

        // RTO.
        TimeNs rto_deadline = 0;
        bool rto_pending = false;

        // Start phase.
        std::int64_t round_end_seq = 0;
        int clean_rounds = 0;
        bool round_loss = false;
        bool handed_off = false;

        // Probe phase.
        bool probe_active = false;
        double probe_saved_cwnd = 0.0;
        std::uint64_t probe_epoch = 0;
        bool probe_sample_seen = false;
        bool lifecycle_extended = false;

        // Directive enforcement.
        double target_cwnd = -1.0;
        std::int64_t last_decision_seq = -1;

        // Baseline controller state.
        RenoState reno;
        CubicState cubic;

        bool forced = false;
    };

    void pump();
    bool can_assign() const;
    void transmit(Sub& sub, std::int64_t seq, std::int64_t bytes, bool retx);
    void on_data_arrival(const Packet& pkt, TimeNs now);
    void handle_ack(std::size_t idx, std::int64_t cum, std::int64_t echo_seq,
                    TimeNs echo_sent, bool echo_retx, TimeNs now);
    void loss_detected(Sub& sub, TimeNs now, bool timeout);
    void exit_recovery(Sub& sub);
    void retransmit_hole(Sub& sub);
    void cc_on_ack(Sub& sub, std::int64_t newly, TimeNs now);
    void cc_on_loss(Sub& sub, TimeNs now);
    void arm_rto(Sub& sub);
    void rto_fired(std::size_t idx);
    TimeNs rto_interval(const Sub& sub) const;
    void lifecycle_check();
    void begin_probe(Sub& sub);
    void end_probe(std::size_t idx, std::uint64_t epoch);
    void emit_report(Sub& sub, std::int64_t acked, std::int64_t delivered_bytes,
                     double rtt_sample, TimeNs now);
    void complete_start_round(Sub& sub);
    std::size_t index_of(const Sub& sub) const;

    Network& net_;
    ConnectionConfig cfg_;
    std::vector<Sub> subs_;
    AllocationStats alloc_stats_;
    LiaState lia_;

    std::int64_t bytes_assigned_ = 0;
    std::int64_t app_backlog_pkts_ = 0;
    TimeNs first_send_time_ = -1;
    TimeNs flow_complete_time_ = -1;

    AckReportFn report_hook_;
    HandoffFn handoff_hook_;
};

}  // namespace tcco
