#pragma once

#include <functional>
#include <span>
#include <string>

#include "tcco/tensor.hpp"

namespace tcco::nn {

struct GradCheckResult {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    std::size_t checked = 0;
};

// Central finite differences against the analytic gradients already
// stored in each Param's grad buffer. `forward` must re-evaluate the
// scalar objective from the current parameter values with no side
// effects. Elements where both gradients are tiny are compared
// absolutely, everything else relatively.
GradCheckResult check_gradients(const std::function<double()>& forward,
                                std::span<Param* const> params, double h = 1e-5);

}  // namespace tcco::nn
