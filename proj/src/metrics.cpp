#include "pgcn/metrics.hpp"

#include <cmath>

#include "pgcn/errors.hpp"

namespace pgcn {

namespace {

void check_shapes(const Tensor& pred, const Tensor& target, const char* op) {
    if (!pred.same_shape(target)) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(pred.shape()) + " and " +
                             shape_str(target.shape()) + " mismatch");
    }
}

}  // namespace

double masked_mae(const Tensor& pred, const Tensor& target, bool mask_zero, std::size_t* survivors) {
    check_shapes(pred, target, "masked_mae");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        if (mask_zero && target[i] == 0.0) continue;
        acc += std::fabs(pred[i] - target[i]);
        ++n;
    }
    if (survivors) *survivors = n;
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

double masked_rmse(const Tensor& pred, const Tensor& target, bool mask_zero, std::size_t* survivors) {
    check_shapes(pred, target, "masked_rmse");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        if (mask_zero && target[i] == 0.0) continue;
        const double d = pred[i] - target[i];
        acc += d * d;
        ++n;
    }
    if (survivors) *survivors = n;
    return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

double masked_mape(const Tensor& pred, const Tensor& target, std::size_t* survivors) {
    check_shapes(pred, target, "masked_mape");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        if (target[i] == 0.0) continue;
        acc += std::fabs(pred[i] - target[i]) / std::fabs(target[i]);
        ++n;
    }
    if (survivors) *survivors = n;
    if (n == 0) throw NumericError("masked_mape: every target is zero; the metric is undefined");
    return 100.0 * acc / static_cast<double>(n);
}

}  // namespace pgcn
