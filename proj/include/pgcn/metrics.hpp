#pragma once

#include <cstddef>
#include <vector>

#include "pgcn/tensor.hpp"

namespace pgcn {

// Mean absolute error over entries where target != 0 when mask_zero is set
// (the 0 sentinel marks missing observations), else over all entries.
// Returns 0 when nothing survives the mask; `survivors` reports how many
// entries were counted.
double masked_mae(const Tensor& pred, const Tensor& target, bool mask_zero, std::size_t* survivors = nullptr);
double masked_rmse(const Tensor& pred, const Tensor& target, bool mask_zero, std::size_t* survivors = nullptr);
// Percent; masking is forced on (the metric divides by the target). All
// targets zero raises NumericError.
double masked_mape(const Tensor& pred, const Tensor& target, std::size_t* survivors = nullptr);

struct MetricsReport {
    struct Row {
        int horizon_steps = 0;  // 0 marks the all-horizon aggregate
        int horizon_minutes = 0;
        double mae = 0.0;
        double rmse = 0.0;
        double mape_percent = 0.0;
        std::size_t count = 0;
    };
    std::vector<Row> per_horizon;
    Row aggregate;
};

}  // namespace pgcn
