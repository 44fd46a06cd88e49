#pragma once

#include <random>

#include "pgcn/tensor.hpp"

namespace pgcn::testing {

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

// values with |x| in [margin, 1]; keeps finite differences clear of the
// relu/abs kinks
inline Tensor random_tensor_off_zero(std::mt19937_64& rng, Shape shape, double margin = 0.1) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> mag(margin, 1.0);
    std::bernoulli_distribution sign(0.5);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    return t;
}

}  // namespace pgcn::testing
