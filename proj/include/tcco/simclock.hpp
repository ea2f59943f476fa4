#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace tcco {

// Simulation time in integer nanoseconds. Integer time keeps the event
// queue free of float drift; metrics are reported in floating seconds.
using TimeNs = std::int64_t;

inline TimeNs seconds_to_ns(double s) {
    return static_cast<TimeNs>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}
inline double ns_to_seconds(TimeNs t) { return static_cast<double>(t) * 1e-9; }

struct DispatchedEvent {
    TimeNs time;
    std::uint64_t seq;
    const char* label;
};

// Discrete-event clock. Events at equal times dispatch in insertion
// order, which makes every run with the same seed and scenario replay
// the exact same trace.
class SimClock {
public:
    using Action = std::function<void()>;

    TimeNs now() const { return now_; }

    void schedule(TimeNs at, const char* label, Action fn) {
        if (at < now_) at = now_;
        heap_.push(Entry{at, next_seq_++, label, std::move(fn)});
    }

    void schedule_in(TimeNs delay, const char* label, Action fn) {
        schedule(now_ + delay, label, std::move(fn));
    }

    // Dispatches every event with time <= until, in (time, insertion)
    // order, then advances the clock to `until`. Returns the number of
    // events dispatched.
    std::size_t advance(TimeNs until) {
        std::size_t dispatched = 0;
        while (!heap_.empty() && heap_.top().time <= until) {
            Entry e = std::move(const_cast<Entry&>(heap_.top()));
            heap_.pop();
            now_ = e.time;
            if (trace_enabled_) trace_.push_back({e.time, e.seq, e.label});
            e.fn();
            ++dispatched;
        }
        if (until > now_) now_ = until;
        return dispatched;
    }

    // Runs until the predicate holds or the horizon passes. The
    // predicate is checked after every event.
    bool advance_until(TimeNs horizon, const std::function<bool()>& done) {
        while (!heap_.empty() && heap_.top().time <= horizon) {
            Entry e = std::move(const_cast<Entry&>(heap_.top()));
            heap_.pop();
            now_ = e.time;
            if (trace_enabled_) trace_.push_back({e.time, e.seq, e.label});
            e.fn();
            if (done()) return true;
        }
        if (horizon > now_) now_ = horizon;
        return done();
    }

    bool empty() const { return heap_.empty(); }
    std::size_t pending() const { return heap_.size(); }

    void set_trace_enabled(bool on) { trace_enabled_ = on; }
    const std::vector<DispatchedEvent>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }

private:
    struct Entry {
        TimeNs time;
        std::uint64_t seq;
        const char* label;
        Action fn;
        bool operator>(const Entry& o) const {
            if (time != o.time) return time > o.time;
            return seq > o.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
    TimeNs now_ = 0;
    std::uint64_t next_seq_ = 0;
    bool trace_enabled_ = false;
    std::vector<DispatchedEvent> trace_;
};

}  // namespace tcco
