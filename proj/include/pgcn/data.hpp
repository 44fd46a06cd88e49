#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgcn/tensor.hpp"

namespace pgcn {

// "YYYY-MM-DD HH:MM:SS" (a 'T' separator and omitted seconds are accepted)
// <-> epoch seconds, no timezone applied.
std::int64_t parse_timestamp(const std::string& s);
std::string format_timestamp(std::int64_t epoch_seconds);

// z-score transform fit on the training split
struct Scaler {
    double mean = 0.0;
    double stddev = 1.0;
    double apply(double x) const { return (x - mean) / stddev; }
    double invert(double z) const { return z * stddev + mean; }
};

// Fixed-frequency multivariate series; missing observations are stored as
// the 0 sentinel.
struct SignalTable {
    std::vector<std::int64_t> timestamps;  // strictly increasing, constant spacing
    std::vector<std::string> node_names;
    Tensor values;  // [S,N]
    int frequency_minutes = 5;
    std::size_t missing_count = 0;

    int rows() const { return values.rank() == 2 ? values.dim(0) : 0; }
    int nodes() const { return values.rank() == 2 ? values.dim(1) : 0; }
    double value(int s, int n) const { return values[static_cast<std::size_t>(s) * nodes() + n]; }
};

// Header `timestamp,<name1>,...,<nameN>`; empty cells become the 0 sentinel
// and are counted in missing_count.
SignalTable load_signal_csv(const std::string& path);
void write_signal_csv(const SignalTable& table, const std::string& path);

struct SplitRange {
    int begin = 0;
    int end = 0;  // half-open
    int size() const { return end - begin; }
    bool empty() const { return end <= begin; }
};

// Sliding-window view over a SignalTable. Sample i's input covers rows
// [i, i+T) and its target rows [i+T, i+T+T'); windows are assigned to
// splits by the time index of their last input row, so a window whose
// target crosses a split boundary stays with the earlier split.
struct WindowedDataset {
    SignalTable table;
    int input_window = 12;
    int output_window = 12;
    bool time_of_day = false;
    int num_samples = 0;
    SplitRange train, val, test;
    Scaler scaler;
    std::string provenance;

    int channels() const { return time_of_day ? 2 : 1; }
    int nodes() const { return table.nodes(); }

    // [B,T,N,C]; primary channel in scaler space, optional time-of-day
    // channel as fraction of day in [0,1).
    Tensor input_batch(std::span<const int> samples) const;
    // [B,T',N] in original units.
    Tensor target_batch(std::span<const int> samples) const;
    // [B,N] last observed input row in original units.
    Tensor last_input_row(std::span<const int> samples) const;
    std::int64_t window_end_timestamp(int sample) const;
};

WindowedDataset make_windows(SignalTable table, int input_window, int output_window, bool time_of_day = false);

// Fractions apply to windowed samples in chronological order and must sum
// to 1; every split must be non-empty.
void chronological_split(WindowedDataset& ds, double train_frac, double val_frac, double test_frac);
// Day counts partition raw rows at day boundaries; windows follow their
// last input row.
void chronological_split_days(WindowedDataset& ds, int train_days, int val_days, int test_days);

// Mean and population std over the primary-channel entries covered by
// train-split inputs, excluding the 0 sentinel when mask_zero is set.
// Stores the result on the dataset and returns it.
Scaler fit_scaler(WindowedDataset& ds, bool mask_zero = true);

// Fingerprint of the sample partition, used to prove that ablation runs
// share one split.
std::uint64_t split_hash(const WindowedDataset& ds);

std::string format_value(double v);  // shortest round-trip decimal

}  // namespace pgcn
