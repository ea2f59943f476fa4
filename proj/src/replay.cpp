#include "tcco/replay.hpp"

#include <stdexcept>

namespace tcco {

void ReplayBuffer::push(Transition tr) {
    if (last_done_) ++episode_;
    last_done_ = tr.done;
    tr.episode = episode_;
    if (ring_.size() < capacity_) {
        ring_.push_back(std::move(tr));
    } else {
        ring_[head_] = std::move(tr);
        head_ = (head_ + 1) % capacity_;
    }
    ++total_;
}

const Transition& ReplayBuffer::at_newest(std::size_t back) const {
    if (back >= ring_.size()) throw std::out_of_range("replay: index");
    // Newest element sits just before head_ once the ring wrapped.
    const std::size_t newest =
        ring_.size() < capacity_ ? ring_.size() - 1 : (head_ + capacity_ - 1) % capacity_;
    return ring_[(newest + ring_.size() - back) % ring_.size()];
}

ReplayBuffer::Window ReplayBuffer::sample_window(int len, Rng& rng) const {
    if (ring_.empty()) throw std::logic_error("replay: empty");
    const std::size_t pick = rng.uniform_int(ring_.size());
    // Translate to age (0 = newest) so walking backward respects ring
    // eviction order.
    const std::size_t newest =
        ring_.size() < capacity_ ? ring_.size() - 1 : (head_ + capacity_ - 1) % capacity_;
    const std::size_t age =
        (newest + ring_.size() - pick) % ring_.size();

    Window out;
    out.reserve(static_cast<std::size_t>(len));
    const std::uint64_t ep = at_newest(age).episode;
    std::size_t a = age;
    for (int k = 0; k < len; ++k) {
        const Transition& tr = at_newest(a);
        if (tr.episode != ep) break;
        out.push_back(&tr);
        if (a + 1 >= ring_.size()) break;
        ++a;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<ReplayBuffer::Window> ReplayBuffer::sample(int count, int len,
                                                       Rng& rng) const {
    std::vector<Window> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(sample_window(len, rng));
    return out;
}

}  // namespace tcco
