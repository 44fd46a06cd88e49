#pragma once

#include <vector>

#include "pgcn/tensor.hpp"

namespace pgcn {

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 5.0;  // global-norm gradient clip; <= 0 disables
};

// Bias-corrected Adam over a fixed parameter list. step() consumes the
// gradients currently stored on the parameters; a non-finite gradient
// aborts the step (parameters untouched) with a diagnostic naming the
// offending parameter.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Parameter*> params, AdamSettings settings);

    void step();
    void zero_grad();
    int step_count() const { return step_count_; }

private:
    std::vector<Parameter*> params_;
    AdamSettings settings_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    int step_count_ = 0;
};

}  // namespace pgcn
