#pragma once

#include <cstdint>
#include <vector>

#include "tcco/rng.hpp"

namespace tcco {

struct Transition {
    std::vector<double> obs;       // flattened observation o_t
    int action = 0;                // a_t
    double reward = 0.0;           // r_t
    bool done = false;             // d_t
    std::vector<double> next_obs;  // o_{t+1}
    std::uint64_t episode = 0;     // filled by the buffer
};

// Ring buffer of transitions in episode order. Sampled contexts end at
// a uniformly chosen position and extend backward, never crossing an
// episode boundary; short heads are front-padded by the consumer.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition tr);

    // Marks an episode discontinuity (e.g. an external reset without a
    // terminal transition) so sampled windows never straddle it.
    void break_episode() { last_done_ = true; }

    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t total_pushed() const { return total_; }

    // Window of at most `len` transitions ending at one sampled
    // position, oldest first, all from one episode.
    using Window = std::vector<const Transition*>;
    Window sample_window(int len, Rng& rng) const;
    std::vector<Window> sample(int count, int len, Rng& rng) const;

    const Transition& at_newest(std::size_t back) const;  // back=0: newest

private:
    std::size_t capacity_;
    std::vector<Transition> ring_;
    std::size_t head_ = 0;  // next write slot once full
    std::uint64_t total_ = 0;
    std::uint64_t episode_ = 0;
    bool last_done_ = true;  // next push starts a new episode
};

}  // namespace tcco
