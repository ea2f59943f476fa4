#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "tcco/path.hpp"
#include "tcco/rng.hpp"
#include "tcco/simclock.hpp"

namespace tcco {

constexpr std::int64_t kMtuBytes = 1500;

struct Packet {
    int conn_id = 0;
    int subflow_id = 0;
    std::int64_t seq = 0;
    std::int64_t bytes = kMtuBytes;
    bool retransmit = false;
    TimeNs sent_time = 0;
    std::vector<int> route;  // path ids, traversed in order
    std::size_t hop = 0;
};

enum class SendOutcome { kInFlight, kDroppedLoss, kDroppedOverflow };

// Ties paths and the clock together and moves packets hop by hop. A
// packet dropped at any hop simply vanishes; the sender only learns
// through duplicate ACKs or a timeout, exactly as over a real network.
class Network {
public:
    explicit Network(std::uint64_t seed) : seed_(seed) {}

    SimClock& clock() { return clock_; }
    TimeNs now() const { return clock_.now(); }

    Path& add_path(std::vector<CapacityPoint> schedule, TimeNs prop_delay,
                   std::int64_t queue_capacity, double loss_rate,
                   std::vector<DelayPoint> delay_schedule = {});

    Path& path(int id) { return *paths_.at(static_cast<std::size_t>(id)); }
    const Path& path(int id) const { return *paths_.at(static_cast<std::size_t>(id)); }
    std::size_t path_count() const { return paths_.size(); }

    // Receiver-side delivery hook, keyed by conn_id.
    using DeliverFn = std::function<void(const Packet&, TimeNs)>;
    void set_receiver(int conn_id, DeliverFn fn) { receivers_[conn_id] = std::move(fn); }

    // Launches a packet onto the first hop of its route. Outcome refers
    // to the first hop only; later hops may still drop it silently.
    SendOutcome send(Packet pkt);

    // Sum of one-way propagation delays along a route at time t (ACK
    // return path: no queueing, no service).
    TimeNs reverse_prop_delay(const std::vector<int>& route, TimeNs t) const;

    // Empty-network base RTT for a route: per-hop single-packet service
    // plus both propagation directions.
    TimeNs base_rtt(const std::vector<int>& route, std::int64_t pkt_bytes = kMtuBytes) const;

private:
    void forward(Packet pkt, TimeNs at);

    SimClock clock_;
    std::uint64_t seed_;
    std::vector<std::unique_ptr<Path>> paths_;
    std::vector<std::unique_ptr<Rng>> path_rng_;
    std::unordered_map<int, DeliverFn> receivers_;
};

}  // namespace tcco
