#include "pgcn/grad_check.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "pgcn/errors.hpp"

namespace pgcn {

double grad_check(const std::function<double()>& loss_and_grad, std::span<Parameter* const> params, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) {
        throw ConfigError("grad_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
    }
    const double base = loss_and_grad();
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    const double repeat = loss_and_grad();
    if (std::memcmp(&base, &repeat, sizeof(double)) != 0) {
        throw DeterminismError("grad_check: forward function is not deterministic (" + std::to_string(base) +
                               " vs " + std::to_string(repeat) + ")");
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + eps;
            const double f_plus = loss_and_grad();
            p.value[i] = saved - eps;
            const double f_minus = loss_and_grad();
            p.value[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
            if (rel > max_rel) max_rel = rel;
        }
    }
    // restore analytic gradients so callers can keep using them
    loss_and_grad();
    return max_rel;
}

}  // namespace pgcn
