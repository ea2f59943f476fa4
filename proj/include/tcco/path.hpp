#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tcco/rng.hpp"
#include "tcco/simclock.hpp"

namespace tcco {

struct CapacityPoint {
    TimeNs start;
    double rate_bps;
};

struct DelayPoint {
    TimeNs start;
    TimeNs delay;
};

enum class EnqueueOutcome { kEnqueued, kDroppedLoss, kDroppedOverflow };

struct EnqueueResult {
    EnqueueOutcome outcome;
    TimeNs depart_time = 0;  // service completion; valid when enqueued
};

// One ground-truth link: a single-server FIFO droptail queue served at a
// piecewise-constant scheduled rate, followed by a propagation segment.
// Stochastic loss is i.i.d. Bernoulli per packet, drawn on enqueue.
class Path {
public:
    Path(int id, std::vector<CapacityPoint> capacity_schedule, TimeNs prop_delay,
         std::int64_t queue_capacity_packets, double loss_rate,
         std::vector<DelayPoint> delay_schedule = {});

    int id() const { return id_; }

    // Attempts to enqueue a packet at time `now`. Loss is drawn first,
    // then droptail. On success the exact service-completion time is
    // returned (the schedule is known ahead, so integrating across
    // capacity boundaries at enqueue is equivalent to re-computing the
    // remaining service at each boundary).
    EnqueueResult enqueue(std::int64_t pkt_bytes, TimeNs now, Rng& rng);

    // Must be called when the packet departs (at the returned
    // depart_time) so queue occupancy stays truthful.
    void on_depart();

    // Hypothetical service-completion time for a packet behind
    // `packets_ahead` same-sized packets, starting service at `now`.
    TimeNs departure_time(std::int64_t packets_ahead, std::int64_t pkt_bytes,
                          TimeNs now) const;

    // Queueing + service + one-way propagation for a packet enqueued now,
    // given the current backlog.
    TimeNs one_way_latency(std::int64_t pkt_bytes, TimeNs now) const;

    double rate_at(TimeNs t) const;
    TimeNs prop_delay_at(TimeNs t) const;
    TimeNs base_prop_delay() const { return delays_.front().delay; }

    std::int64_t queue_len() const { return queued_; }
    std::int64_t queue_capacity() const { return queue_capacity_; }
    double loss_rate() const { return loss_rate_; }
    const std::vector<CapacityPoint>& capacity_schedule() const { return schedule_; }
    const std::vector<DelayPoint>& delay_schedule() const { return delays_; }

    // Conservation counters.
    std::int64_t enqueued_count() const { return n_enqueued_; }
    std::int64_t departed_count() const { return n_departed_; }
    std::int64_t dropped_loss_count() const { return n_dropped_loss_; }
    std::int64_t dropped_overflow_count() const { return n_dropped_overflow_; }

private:
    // Time at which `bits` of service starting at `start` completes under
    // the capacity schedule.
    TimeNs service_finish(TimeNs start, double bits) const;

    int id_;
    std::vector<CapacityPoint> schedule_;
    std::vector<DelayPoint> delays_;
    std::int64_t queue_capacity_;
    double loss_rate_;

    TimeNs busy_until_ = 0;
    std::int64_t queued_ = 0;

    std::int64_t n_enqueued_ = 0;
    std::int64_t n_departed_ = 0;
    std::int64_t n_dropped_loss_ = 0;
    std::int64_t n_dropped_overflow_ = 0;
};

constexpr std::int64_t kUnlimitedQueue = std::numeric_limits<std::int64_t>::max();

}  // namespace tcco
