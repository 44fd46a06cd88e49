#pragma once

#include <cstdint>
#include <string>

#include "pgcn/model.hpp"

namespace pgcn {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epoch = -1;
    double val_mae = 0.0;
};

// Checkpoint = a plain-text manifest at `path` (config fields, seed, epoch,
// validation MAE, and one line per named parameter with its shape and byte
// offset) plus `path + ".bin"` holding every parameter as little-endian
// 64-bit floats concatenated in manifest order.
void save_checkpoint(const std::string& path, PGCNModel& model, const CheckpointMeta& meta);

// Rebuilds the model from the manifest config and loads the blobs,
// validating every parameter name and shape against the reconstructed
// model.
PGCNModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace pgcn
