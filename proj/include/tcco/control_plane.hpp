#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tcco/connection.hpp"
#include "tcco/frames.hpp"
#include "tcco/network.hpp"
#include "tcco/observation.hpp"

namespace tcco {

// In-simulation byte channel with a fixed one-way latency. Every frame
// is delivered exactly `delay` later; equal delays plus FIFO event
// ordering preserve send order.
class FrameChannel {
public:
    FrameChannel(SimClock& clock, TimeNs delay) : clock_(clock), delay_(delay) {}

    void set_receiver(std::function<void(const std::string&)> fn) { recv_ = std::move(fn); }
    void send(std::string line) {
        clock_.schedule_in(delay_, "frame", [this, line = std::move(line)] {
            if (recv_) recv_(line);
        });
    }
    TimeNs delay() const { return delay_; }

private:
    SimClock& clock_;
    TimeNs delay_;
    std::function<void(const std::string&)> recv_;
};

enum class InvocationMode { kEveryWindow, kAllSubflowsReported };

struct ControlPlaneConfig {
    TimeNs window = 20'000'000;  // decision interval
    TimeNs client_proxy_delay = 0;
    TimeNs proxy_engine_delay = 0;  // per direction
    InvocationMode mode = InvocationMode::kEveryWindow;
    int inactive_after_windows = 3;
    int expflag_period = 6;
    int flushes_per_window = 4;  // client report cadence within a window
};

// Pure invocation decision used by the proxy (and its tests): given
// which subflows reported this window and which are active, decide
// whether to trigger the engine.
bool proxy_should_invoke(InvocationMode mode, const std::vector<bool>& reported,
                         const std::vector<bool>& active);

// One aggregated per-subflow record as handed to the engine.
struct EngineRecord {
    MetricFrame metric;
    bool fresh = false;
};

struct EngineSnapshot {
    std::int64_t window_seq = 0;
    TimeNs engine_time = 0;
    std::vector<EngineRecord> subflows;
};

// Engine-side observation assembly. Each subflow's slice is built from
// that subflow's record alone: cross-flow blindness by construction.
Observation observation_from_snapshot(const EngineSnapshot& snap, double window_s);

// The three-tier observation/directive pipeline around one connection:
// per-subflow in-kernel client emulators that flush window metrics, a
// user-space proxy that aggregates and demultiplexes, and the engine
// boundary where decisions are injected. Every message crosses the
// byte-level frame codec.
class ControlPlane {
public:
    ControlPlane(Network& net, Connection& conn, ControlPlaneConfig cfg);

    void start();

    // Engine side: called once per invocation with the time-aligned
    // composite snapshot.
    using EngineFn = std::function<void(const EngineSnapshot&)>;
    void set_engine(EngineFn fn) { engine_fn_ = std::move(fn); }

    // Engine side: issue a joint directive (one target per subflow).
    void send_directive(const std::vector<double>& targets);

    std::int64_t decision_seq() const { return decision_seq_; }
    std::int64_t frames_skipped() const { return frames_skipped_; }
    std::int64_t invocations() const { return invocations_; }
    const ControlPlaneConfig& config() const { return cfg_; }

private:
    struct ClientState {
        // Window accumulators fed from AckReports.
        std::int64_t delivered = 0;
        double rtt_sum_s = 0.0;
        std::int64_t rtt_n = 0;
        std::int64_t acks = 0;
        double cwnd_max = 0.0;
        std::int64_t frame_seq = 0;
        ExpflagTracker expflag{6};
        bool flag = false;
    };

    struct ProxyState {
        // Latest window accumulation per subflow.
        std::vector<std::int64_t> delivered;
        std::vector<std::int64_t> rtt_sum_us;
        std::vector<std::int64_t> rtt_n;
        std::vector<MetricFrame> last_frame;
        std::vector<bool> reported;
        std::vector<int> silent_windows;
        std::vector<bool> has_any;
        std::vector<MetricFrame> last_good;
        std::int64_t window_seq = 0;
        std::int64_t last_applied_decision = -1;
    };

    void client_flush(std::size_t idx, bool window_end);
    void proxy_receive(const std::string& line);
    void proxy_window_close();
    void engine_receive(const std::string& line);
    void client_receive(std::size_t idx, const std::string& line);

    Network& net_;
    Connection& conn_;
    ControlPlaneConfig cfg_;

    std::vector<ClientState> clients_;
    std::vector<std::unique_ptr<FrameChannel>> client_to_proxy_;
    std::vector<std::unique_ptr<FrameChannel>> proxy_to_client_;
    std::unique_ptr<FrameChannel> proxy_to_engine_;
    std::unique_ptr<FrameChannel> engine_to_proxy_;

    ProxyState proxy_;
    EngineFn engine_fn_;
    std::map<std::int64_t, std::vector<MetricFrame>> engine_inbox_;
    std::int64_t decision_seq_ = 0;
    std::int64_t frames_skipped_ = 0;
    std::int64_t invocations_ = 0;
};

}  // namespace tcco
