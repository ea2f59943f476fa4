#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tcco {

// Joint discrete action: one cwnd step delta per subflow, delta in
// [-n, n], scaled by k packets. Encoded as a mixed-radix index with
// subflow 0 as the least-significant digit.
struct ActionSpace {
    int subflows = 2;   // M
    int max_step = 2;   // n
    int scale_pkts = 2; // k

    int radix() const { return 2 * max_step + 1; }

    int size() const {
        int total = 1;
        for (int i = 0; i < subflows; ++i) total *= radix();
        return total;
    }

    std::vector<int> decode(int index) const {
        if (index < 0 || index >= size())
            throw std::out_of_range("action index out of range");
        std::vector<int> deltas(static_cast<std::size_t>(subflows));
        for (int i = 0; i < subflows; ++i) {
            deltas[static_cast<std::size_t>(i)] = index % radix() - max_step;
            index /= radix();
        }
        return deltas;
    }

    int encode(const std::vector<int>& deltas) const {
        if (static_cast<int>(deltas.size()) != subflows)
            throw std::invalid_argument("action vector length mismatch");
        int index = 0;
        for (int i = subflows - 1; i >= 0; --i) {
            const int d = deltas[static_cast<std::size_t>(i)];
            if (d < -max_step || d > max_step)
                throw std::out_of_range("action delta out of range");
            index = index * radix() + (d + max_step);
        }
        return index;
    }

    // Packet-level cwnd change for one subflow's delta.
    double cwnd_delta(int delta) const { return static_cast<double>(scale_pkts * delta); }
};

}  // namespace tcco
