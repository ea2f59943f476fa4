#include "tcco/network.hpp"

namespace tcco {

Path& Network::add_path(std::vector<CapacityPoint> schedule, TimeNs prop_delay,
                        std::int64_t queue_capacity, double loss_rate,
                        std::vector<DelayPoint> delay_schedule) {
    const int id = static_cast<int>(paths_.size());
    paths_.push_back(std::make_unique<Path>(id, std::move(schedule), prop_delay,
                                            queue_capacity, loss_rate,
                                            std::move(delay_schedule)));
    path_rng_.push_back(std::make_unique<Rng>(derive_seed(seed_, 0x7000 + id)));
    return *paths_.back();
}

SendOutcome Network::send(Packet pkt) {
    Path& p = path(pkt.route.at(pkt.hop));
    const EnqueueResult res = p.enqueue(pkt.bytes, clock_.now(), *path_rng_[pkt.route[pkt.hop]]);
    switch (res.outcome) {
        case EnqueueOutcome::kDroppedLoss:
            return SendOutcome::kDroppedLoss;
        case EnqueueOutcome::kDroppedOverflow:
            return SendOutcome::kDroppedOverflow;
        case EnqueueOutcome::kEnqueued:
            break;
    }
    clock_.schedule(res.depart_time, "depart", [this, pkt = std::move(pkt)]() mutable {
        Path& served = path(pkt.route[pkt.hop]);
        served.on_depart();
        const TimeNs arrive = clock_.now() + served.prop_delay_at(clock_.now());
        clock_.schedule(arrive, "hop_arrive", [this, pkt = std::move(pkt)]() mutable {
            forward(std::move(pkt), clock_.now());
        });
    });
    return SendOutcome::kInFlight;
}

void Network::forward(Packet pkt, TimeNs at) {
    ++pkt.hop;
    if (pkt.hop < pkt.route.size()) {
        Path& p = path(pkt.route[pkt.hop]);
        const EnqueueResult res = p.enqueue(pkt.bytes, at, *path_rng_[pkt.route[pkt.hop]]);
        if (res.outcome != EnqueueOutcome::kEnqueued) return;  // silent mid-route drop
        clock_.schedule(res.depart_time, "depart", [this, pkt = std::move(pkt)]() mutable {
            Path& served = path(pkt.route[pkt.hop]);
            served.on_depart();
            const TimeNs arrive = clock_.now() + served.prop_delay_at(clock_.now());
            clock_.schedule(arrive, "hop_arrive", [this, pkt = std::move(pkt)]() mutable {
                forward(std::move(pkt), clock_.now());
            });
        });
        return;
    }
    auto it = receivers_.find(pkt.conn_id);
    if (it != receivers_.end()) it->second(pkt, at);
}

TimeNs Network::reverse_prop_delay(const std::vector<int>& route, TimeNs t) const {
    TimeNs total = 0;
    for (int id : route) total += path(id).prop_delay_at(t);
    return total;
}

TimeNs Network::base_rtt(const std::vector<int>& route, std::int64_t pkt_bytes) const {
    TimeNs total = 0;
    for (int id : route) {
        const Path& p = path(id);
        total += 2 * p.base_prop_delay();
        total += p.departure_time(0, pkt_bytes, 0);
    }
    return total;
}

}  // namespace tcco
