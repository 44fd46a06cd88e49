#include "pgcn/optim.hpp"

#include <cmath>

#include "pgcn/errors.hpp"

namespace pgcn {

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamSettings settings)
    : params_(std::move(params)), settings_(settings) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Parameter* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void AdamOptimizer::step() {
    for (Parameter* p : params_) {
        for (std::size_t i = 0; i < p->grad.numel(); ++i) {
            if (!std::isfinite(p->grad[i])) {
                throw NumericError("adam: non-finite gradient in `" + p->name + "` at flat index " +
                                   std::to_string(i) + " (value " + std::to_string(p->grad[i]) +
                                   ", step " + std::to_string(step_count_ + 1) + "); step aborted");
            }
        }
    }
    double scale = 1.0;
    if (settings_.clip_norm > 0.0) {
        double sq = 0.0;
        for (Parameter* p : params_)
            for (std::size_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
        const double norm = std::sqrt(sq);
        if (norm > settings_.clip_norm) scale = settings_.clip_norm / norm;
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(settings_.beta1, step_count_);
    const double bc2 = 1.0 - std::pow(settings_.beta2, step_count_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double g = p.grad[i] * scale;
            m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * g;
            v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.value[i] -= settings_.lr * m_hat / (std::sqrt(v_hat) + settings_.eps);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace pgcn
