#include "pgcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "pgcn/checkpoint.hpp"
#include "pgcn/errors.hpp"

namespace pgcn {

Var masked_mae_loss(Tape& tape, Var pred, const Tensor& target_btn, const Scaler& scaler, bool mask_zero,
                    std::size_t* survivors) {
    if (target_btn.rank() != 3) {
        throw DimensionError("masked_mae_loss: target must be [B,T',N], got " + shape_str(target_btn.shape()));
    }
    Tensor target = swap_axes12(target_btn);  // [B,N,T'] to match the prediction layout
    if (target.shape() != pred.shape()) {
        throw DimensionError("masked_mae_loss: shapes " + shape_str(pred.shape()) + " and " +
                             shape_str(target.shape()) + " mismatch");
    }
    Tensor weights(target.shape());
    std::size_t count = 0;
    for (std::size_t i = 0; i < target.numel(); ++i) {
        const bool keep = !mask_zero || target[i] != 0.0;
        weights[i] = keep ? 1.0 : 0.0;
        count += keep ? 1 : 0;
    }
    if (survivors) *survivors = count;
    Tape& t = tape;
    if (count == 0) return t.constant(Tensor::scalar(0.0));
    Tensor neg_target(target.shape());
    for (std::size_t i = 0; i < target.numel(); ++i) neg_target[i] = -target[i];
    Var pred_orig = t.affine(pred, scaler.stddev, scaler.mean);
    Var diff = t.abs(t.add_const(pred_orig, std::move(neg_target)));
    return t.scale(t.sum(t.mul_const(diff, std::move(weights))), 1.0 / static_cast<double>(count));
}

namespace {

std::vector<int> split_indices(const SplitRange& split) {
    std::vector<int> ids(static_cast<std::size_t>(split.size()));
    std::iota(ids.begin(), ids.end(), split.begin);
    return ids;
}

}  // namespace

BatchPredictor model_predictor(PGCNModel& model, const WindowedDataset& ds, const TransitionPair* trans) {
    return [&model, &ds, trans](std::span<const int> samples) {
        Tensor pred = model.predict(ds.input_batch(samples), trans);  // [B,T',N], scaler space
        for (std::size_t i = 0; i < pred.numel(); ++i) pred[i] = ds.scaler.invert(pred[i]);
        return pred;
    };
}

Tensor historical_average_baseline(const Tensor& window_btn, int horizon) {
    if (window_btn.rank() != 3) {
        throw DimensionError("historical_average_baseline: window must be [B,T,N], got " +
                             shape_str(window_btn.shape()));
    }
    if (horizon < 1) throw ConfigError("historical_average_baseline: horizon must be >= 1");
    const int b = window_btn.dim(0), t = window_btn.dim(1), n = window_btn.dim(2);
    Tensor out({b, horizon, n});
    for (int bi = 0; bi < b; ++bi) {
        const double* last = window_btn.data() + (static_cast<std::size_t>(bi) * t + (t - 1)) * n;
        for (int h = 0; h < horizon; ++h) {
            double* dst = out.data() + (static_cast<std::size_t>(bi) * horizon + h) * n;
            std::copy(last, last + n, dst);
        }
    }
    return out;
}

BatchPredictor ha_predictor(const WindowedDataset& ds) {
    return [&ds](std::span<const int> samples) {
        const int b = static_cast<int>(samples.size());
        const int t = ds.input_window, n = ds.nodes();
        Tensor window({b, t, n});
        for (int bi = 0; bi < b; ++bi) {
            const int start = samples[static_cast<std::size_t>(bi)];
            for (int ti = 0; ti < t; ++ti)
                for (int ni = 0; ni < n; ++ni)
                    window[(static_cast<std::size_t>(bi) * t + ti) * n + ni] = ds.table.value(start + ti, ni);
        }
        return historical_average_baseline(window, ds.output_window);
    };
}

MetricsReport evaluate(const WindowedDataset& ds, const SplitRange& split, const BatchPredictor& predictor,
                       bool mask_zero, const std::vector<int>& horizon_steps, int batch_size) {
    if (split.empty()) throw ConfigError("evaluate: empty split");
    for (int h : horizon_steps) {
        if (h < 1 || h > ds.output_window) {
            throw ConfigError("evaluate: horizon step " + std::to_string(h) + " exceeds output window " +
                              std::to_string(ds.output_window));
        }
    }
    struct Acc {
        double abs_sum = 0.0, sq_sum = 0.0, ape_sum = 0.0;
        std::size_t count = 0, ape_count = 0;
    };
    std::vector<Acc> per_h(horizon_steps.size());
    Acc agg;

    std::vector<int> ids = split_indices(split);
    const int tp = ds.output_window, n = ds.nodes();
    for (std::size_t pos = 0; pos < ids.size(); pos += static_cast<std::size_t>(batch_size)) {
        std::size_t len = std::min(static_cast<std::size_t>(batch_size), ids.size() - pos);
        std::span<const int> chunk(ids.data() + pos, len);
        Tensor pred = predictor(chunk);
        Tensor target = ds.target_batch(chunk);
        if (!pred.same_shape(target)) {
            throw DimensionError("evaluate: predictor returned " + shape_str(pred.shape()) + ", expected " +
                                 shape_str(target.shape()));
        }
        auto feed = [&](Acc& acc, int h_index) {
            for (std::size_t bi = 0; bi < len; ++bi)
                for (int ni = 0; ni < n; ++ni) {
                    const std::size_t at = (bi * tp + static_cast<std::size_t>(h_index)) * n + ni;
                    const double y = target[at];
                    const double d = pred[at] - y;
                    if (!mask_zero || y != 0.0) {
                        acc.abs_sum += std::fabs(d);
                        acc.sq_sum += d * d;
                        ++acc.count;
                    }
                    if (y != 0.0) {
                        acc.ape_sum += std::fabs(d) / std::fabs(y);
                        ++acc.ape_count;
                    }
                }
        };
        for (std::size_t hi = 0; hi < horizon_steps.size(); ++hi) feed(per_h[hi], horizon_steps[hi] - 1);
        for (int h = 0; h < tp; ++h) feed(agg, h);
    }

    auto to_row = [&](const Acc& acc, int steps) {
        MetricsReport::Row row;
        row.horizon_steps = steps;
        row.horizon_minutes = steps * ds.table.frequency_minutes;
        row.count = acc.count;
        row.mae = acc.count ? acc.abs_sum / static_cast<double>(acc.count) : 0.0;
        row.rmse = acc.count ? std::sqrt(acc.sq_sum / static_cast<double>(acc.count)) : 0.0;
        if (acc.ape_count == 0) throw NumericError("evaluate: every target is zero; MAPE undefined");
        row.mape_percent = 100.0 * acc.ape_sum / static_cast<double>(acc.ape_count);
        return row;
    };
    MetricsReport report;
    for (std::size_t hi = 0; hi < horizon_steps.size(); ++hi)
        report.per_horizon.push_back(to_row(per_h[hi], horizon_steps[hi]));
    report.aggregate = to_row(agg, 0);
    report.aggregate.horizon_minutes = 0;
    return report;
}

double split_mae(PGCNModel& model, const WindowedDataset& ds, const SplitRange& split, const TransitionPair* trans,
                 bool mask_zero, int batch_size) {
    if (split.empty()) throw ConfigError("split_mae: empty split");
    BatchPredictor predictor = model_predictor(model, ds, trans);
    std::vector<int> ids = split_indices(split);
    double abs_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t pos = 0; pos < ids.size(); pos += static_cast<std::size_t>(batch_size)) {
        std::size_t len = std::min(static_cast<std::size_t>(batch_size), ids.size() - pos);
        std::span<const int> chunk(ids.data() + pos, len);
        Tensor pred = predictor(chunk);
        Tensor target = ds.target_batch(chunk);
        for (std::size_t i = 0; i < pred.numel(); ++i) {
            if (mask_zero && target[i] == 0.0) continue;
            abs_sum += std::fabs(pred[i] - target[i]);
            ++count;
        }
    }
    return count ? abs_sum / static_cast<double>(count) : 0.0;
}

TrainReport train(PGCNModel& model, const WindowedDataset& ds, const TransitionPair* trans,
                  const TrainOptions& opts) {
    if (ds.train.empty() || ds.val.empty()) throw ConfigError("train: needs non-empty train and validation splits");
    if (opts.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

    TrainReport report;
    report.seed = opts.seed;
    AdamOptimizer optimizer(model.parameters(), opts.adam);
    std::mt19937_64 rng(opts.seed);
    std::vector<int> order = split_indices(ds.train);

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_weighted = 0.0;
        std::size_t loss_weight = 0;
        bool aborted = false;
        for (std::size_t pos = 0; pos < order.size() && !aborted; pos += static_cast<std::size_t>(opts.batch_size)) {
            std::size_t len = std::min(static_cast<std::size_t>(opts.batch_size), order.size() - pos);
            std::span<const int> chunk(order.data() + pos, len);
            Tensor input = ds.input_batch(chunk);
            Tensor target = ds.target_batch(chunk);
            Tape tape;
            Var pred = model.forward(tape, input, trans);
            std::size_t survivors = 0;
            Var loss = masked_mae_loss(tape, pred, target, ds.scaler, opts.mask_zero, &survivors);
            const double loss_value = loss.value()[0];
            if (!std::isfinite(loss_value)) {
                report.diverged = true;
                report.divergence_note = "non-finite loss at epoch " + std::to_string(epoch);
                aborted = true;
                break;
            }
            loss_weighted += loss_value * static_cast<double>(survivors);
            loss_weight += survivors;
            model.zero_grad();
            tape.backward(loss);
            try {
                optimizer.step();
            } catch (const NumericError& e) {
                report.diverged = true;
                report.divergence_note = e.what();
                aborted = true;
            }
        }
        if (report.diverged) break;

        const double train_mae = loss_weight ? loss_weighted / static_cast<double>(loss_weight) : 0.0;
        const double val_mae = split_mae(model, ds, ds.val, trans, opts.mask_zero, opts.batch_size);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back({epoch, train_mae, val_mae, seconds});
        if (val_mae < report.best_val_mae) {
            report.best_val_mae = val_mae;
            report.best_epoch = epoch;
            if (!opts.checkpoint_path.empty()) {
                save_checkpoint(opts.checkpoint_path, model, CheckpointMeta{opts.seed, epoch, val_mae});
                report.best_checkpoint = opts.checkpoint_path;
            }
        }
        if (opts.on_epoch) opts.on_epoch(epoch, train_mae, val_mae, seconds);
    }
    return report;
}

}  // namespace pgcn
