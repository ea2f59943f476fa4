#include "tcco/path.hpp"

#include <cmath>

namespace tcco {

Path::Path(int id, std::vector<CapacityPoint> capacity_schedule, TimeNs prop_delay,
           std::int64_t queue_capacity_packets, double loss_rate,
           std::vector<DelayPoint> delay_schedule)
    : id_(id),
      schedule_(std::move(capacity_schedule)),
      delays_(std::move(delay_schedule)),
      queue_capacity_(queue_capacity_packets),
      loss_rate_(loss_rate) {
    if (schedule_.empty()) throw std::invalid_argument("path: empty capacity schedule");
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
        if (schedule_[i].rate_bps <= 0) throw std::invalid_argument("path: rate must be > 0");
        if (i > 0 && schedule_[i].start <= schedule_[i - 1].start)
            throw std::invalid_argument("path: schedule not strictly increasing");
    }
    if (delays_.empty()) delays_.push_back({0, prop_delay});
    for (std::size_t i = 0; i < delays_.size(); ++i) {
        if (delays_[i].delay < 0) throw std::invalid_argument("path: negative prop delay");
        if (i > 0 && delays_[i].start <= delays_[i - 1].start)
            throw std::invalid_argument("path: delay schedule not strictly increasing");
    }
    if (loss_rate_ < 0.0 || loss_rate_ > 1.0)
        throw std::invalid_argument("path: loss_rate outside [0,1]");
    if (queue_capacity_ < 1) throw std::invalid_argument("path: queue capacity < 1");
}

double Path::rate_at(TimeNs t) const {
    std::size_t i = schedule_.size();
    while (i > 1 && schedule_[i - 1].start > t) --i;
    return schedule_[i - 1].rate_bps;
}

TimeNs Path::prop_delay_at(TimeNs t) const {
    std::size_t i = delays_.size();
    while (i > 1 && delays_[i - 1].start > t) --i;
    return delays_[i - 1].delay;
}

TimeNs Path::service_finish(TimeNs start, double bits) const {
    TimeNs t = start;
    std::size_t seg = schedule_.size();
    while (seg > 1 && schedule_[seg - 1].start > t) --seg;
    --seg;
    double remaining = bits;
    while (true) {
        const double rate = schedule_[seg].rate_bps;
        if (seg + 1 == schedule_.size()) {
            return t + static_cast<TimeNs>(std::llround(remaining / rate * 1e9));
        }
        const TimeNs seg_end = schedule_[seg + 1].start;
        const double seg_bits = rate * ns_to_seconds(seg_end - t);
        if (seg_bits >= remaining) {
            return t + static_cast<TimeNs>(std::llround(remaining / rate * 1e9));
        }
        remaining -= seg_bits;
        t = seg_end;
        ++seg;
    }
}

EnqueueResult Path::enqueue(std::int64_t pkt_bytes, TimeNs now, Rng& rng) {
    if (loss_rate_ > 0.0 && rng.bernoulli(loss_rate_)) {
        ++n_dropped_loss_;
        return {EnqueueOutcome::kDroppedLoss};
    }
    if (queued_ >= queue_capacity_) {
        ++n_dropped_overflow_;
        return {EnqueueOutcome::kDroppedOverflow};
    }
    const TimeNs start = busy_until_ > now ? busy_until_ : now;
    const TimeNs finish = service_finish(start, static_cast<double>(pkt_bytes) * 8.0);
    busy_until_ = finish;
    ++queued_;
    ++n_enqueued_;
    return {EnqueueOutcome::kEnqueued, finish};
}

void Path::on_depart() {
    --queued_;
    ++n_departed_;
}

TimeNs Path::departure_time(std::int64_t packets_ahead, std::int64_t pkt_bytes,
                            TimeNs now) const {
    const double bits = static_cast<double>(packets_ahead + 1) *
                        static_cast<double>(pkt_bytes) * 8.0;
    return service_finish(now, bits);
}

TimeNs Path::one_way_latency(std::int64_t pkt_bytes, TimeNs now) const {
    const TimeNs start = busy_until_ > now ? busy_until_ : now;
    const TimeNs finish = service_finish(start, static_cast<double>(pkt_bytes) * 8.0);
    return (finish - now) + prop_delay_at(finish);
}

}  // namespace tcco
