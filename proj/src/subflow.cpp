#include "tcco/subflow.hpp"

#include <string_view>

namespace tcco {

const char* to_string(SubflowMode m) {
    switch (m) {
        case SubflowMode::kNormal: return "normal";
        case SubflowMode::kRecovery: return "recovery";
        case SubflowMode::kStart: return "start";
        case SubflowMode::kProbe: return "probe";
    }
    return "?";
}

std::optional<SubflowMode> subflow_mode_from_string(std::string_view s) {
    if (s == "normal") return SubflowMode::kNormal;
    if (s == "recovery") return SubflowMode::kRecovery;
    if (s == "start") return SubflowMode::kStart;
    if (s == "probe") return SubflowMode::kProbe;
    return std::nullopt;
}

std::optional<int> select_subflow(std::span<const SubflowState> subflows) {
    const SubflowState* best = nullptr;
    for (const SubflowState& s : subflows) {
        if (!availability(s)) continue;
        if (best == nullptr || s.srtt < best->srtt ||
            (s.srtt == best->srtt && s.subflow_id < best->subflow_id)) {
            best = &s;
        }
    }
    if (best == nullptr) return std::nullopt;
    return best->subflow_id;
}

std::vector<double> AllocationStats::shares() const {
    std::int64_t total = 0;
    for (std::int64_t a : assigned) total += a;
    std::vector<double> out(assigned.size(), 0.0);
    if (total == 0) return out;
    for (std::size_t i = 0; i < assigned.size(); ++i)
        out[i] = static_cast<double>(assigned[i]) / static_cast<double>(total);
    return out;
}

std::vector<double> allocation_load(double total_arrival_rate_bps,
                                    const std::vector<double>& shares) {
    std::vector<double> out(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i)
        out[i] = total_arrival_rate_bps * shares[i];
    return out;
}

}  // namespace tcco
