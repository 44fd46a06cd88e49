#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pgcn/data.hpp"
#include "pgcn/metrics.hpp"
#include "pgcn/model.hpp"
#include "pgcn/optim.hpp"

namespace pgcn {

struct TrainOptions {
    int epochs = 100;
    int batch_size = 64;
    std::uint64_t seed = 1;
    AdamSettings adam{};
    bool mask_zero = true;
    std::string checkpoint_path;  // best-validation checkpoint; empty disables saving
    std::function<void(int, double, double, double)> on_epoch;  // epoch, train_mae, val_mae, seconds
};

struct TrainReport {
    struct EpochRow {
        int epoch = 0;
        double train_mae = 0.0;
        double val_mae = 0.0;
        double seconds = 0.0;
    };
    std::vector<EpochRow> epochs;
    int best_epoch = -1;  // earliest epoch attaining the minimum validation MAE
    double best_val_mae = std::numeric_limits<double>::infinity();
    std::string best_checkpoint;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string divergence_note;
};

// Taped masked-MAE loss in original units: pred [B,N,T'] in scaler space is
// inverted through the scaler and compared against target [B,T',N].
// `survivors` receives the number of unmasked entries (0 yields a constant
// zero loss).
Var masked_mae_loss(Tape& tape, Var pred, const Tensor& target_btn, const Scaler& scaler, bool mask_zero,
                    std::size_t* survivors = nullptr);

// Seeded shuffled minibatch training with per-epoch validation and
// best-validation checkpointing. A non-finite loss or gradient aborts
// training with `diverged` set; the best checkpoint so far is retained.
TrainReport train(PGCNModel& model, const WindowedDataset& ds, const TransitionPair* trans,
                  const TrainOptions& opts);

// Batched prediction in ORIGINAL units over a list of sample indices.
using BatchPredictor = std::function<Tensor(std::span<const int>)>;

BatchPredictor model_predictor(PGCNModel& model, const WindowedDataset& ds, const TransitionPair* trans);
BatchPredictor ha_predictor(const WindowedDataset& ds);

// Persistence forecast: repeat the last observed step of the window
// ([B,T,N], original units) across the whole horizon -> [B,T',N].
Tensor historical_average_baseline(const Tensor& window_btn, int horizon);

// Per-horizon (default steps 3, 6, 12) and all-horizon metrics over a
// split, computed in original units.
MetricsReport evaluate(const WindowedDataset& ds, const SplitRange& split, const BatchPredictor& predictor,
                       bool mask_zero, const std::vector<int>& horizon_steps = {3, 6, 12}, int batch_size = 64);

// Aggregate masked MAE of the model over one split (the validation score
// used for model selection).
double split_mae(PGCNModel& model, const WindowedDataset& ds, const SplitRange& split, const TransitionPair* trans,
                 bool mask_zero, int batch_size = 64);

}  // namespace pgcn
