#include "tcco/grad_check.hpp"

#include <cmath>

namespace tcco::nn {

GradCheckResult check_gradients(const std::function<double()>& forward,
                                std::span<Param* const> params, double h) {
    GradCheckResult res;
    // Elements with gradients far below the problem's gradient scale sit
    // inside central-difference roundoff (~eps_f/h); normalize against
    // the scale so only genuine mismatches register.
    double grad_scale = 0.0;
    for (const Param* p : params)
        for (double g : p->grad.v) grad_scale = std::max(grad_scale, std::abs(g));
    const double floor = std::max(1e-8, 1e-3 * grad_scale);
    for (Param* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.v[i];
            p->value.v[i] = saved + h;
            const double up = forward();
            p->value.v[i] = saved - h;
            const double down = forward();
            p->value.v[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad.v[i];
            const double abs_err = std::abs(analytic - numeric);
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), floor});
            const double rel = abs_err / denom;
            res.max_abs_err = std::max(res.max_abs_err, abs_err);
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p->name;
                res.worst_index = static_cast<int>(i);
            }
            ++res.checked;
        }
    }
    return res;
}

}  // namespace tcco::nn
