#pragma once

#include <functional>
#include <span>

#include "pgcn/tensor.hpp"

namespace pgcn {

// Central-difference check of analytic gradients.
//
// `loss_and_grad` must zero the parameter gradients, run a taped forward +
// backward over `params`, and return the scalar loss. It is invoked once to
// capture the analytic gradients, once more to verify determinism (two
// differing loss values raise DeterminismError), and then twice per
// parameter entry at theta +/- eps.
//
// Returns max over all entries of
//   |analytic - numeric| / max(1, |analytic|, |numeric|)
// with numeric = (f(theta+eps) - f(theta-eps)) / (2 eps).
double grad_check(const std::function<double()>& loss_and_grad, std::span<Parameter* const> params, double eps);

}  // namespace pgcn
