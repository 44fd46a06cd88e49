#include "pgcn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pgcn/errors.hpp"

namespace pgcn {

namespace {

// civil-date <-> day-count conversions (proleptic Gregorian, UTC)
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::int64_t parse_timestamp(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se);
    if (n < 6 || (sep != ' ' && sep != 'T')) throw ParseError("bad timestamp `" + s + "`");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) {
        throw ParseError("bad timestamp `" + s + "`");
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_timestamp(std::int64_t t) {
    std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
    int secs = static_cast<int>(t - days * 86400);
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d, secs / 3600, (secs / 60) % 60,
                  secs % 60);
    return buf;
}

std::string format_value(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

SignalTable load_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open signal file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    auto header = split_line(line);
    if (header.size() < 2 || header[0] != "timestamp") {
        throw ParseError(path + ":1: expected header `timestamp,<name1>,...`");
    }
    SignalTable table;
    table.node_names.assign(header.begin() + 1, header.end());
    const int n = static_cast<int>(table.node_names.size());

    std::vector<double> data;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (static_cast<int>(fields.size()) != n + 1) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(n + 1) +
                             " fields, got " + std::to_string(fields.size()));
        }
        std::int64_t ts;
        try {
            ts = parse_timestamp(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!table.timestamps.empty() && ts <= table.timestamps.back()) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": timestamps must be strictly increasing");
        }
        table.timestamps.push_back(ts);
        for (int j = 1; j <= n; ++j) {
            const std::string& f = fields[static_cast<std::size_t>(j)];
            if (f.empty()) {
                data.push_back(0.0);  // missing sentinel
                ++table.missing_count;
                continue;
            }
            double v;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad value `" + f + "`");
            }
            data.push_back(v);
        }
    }
    const int s = static_cast<int>(table.timestamps.size());
    if (s == 0) throw ParseError(path + ": no data rows");
    if (s >= 2) {
        const std::int64_t spacing = table.timestamps[1] - table.timestamps[0];
        for (int i = 2; i < s; ++i) {
            if (table.timestamps[static_cast<std::size_t>(i)] - table.timestamps[static_cast<std::size_t>(i - 1)] !=
                spacing) {
                throw ParseError(path + ": inconsistent timestamp spacing at row " + std::to_string(i + 1));
            }
        }
        if (spacing % 60 != 0) throw ParseError(path + ": timestamp spacing must be whole minutes");
        table.frequency_minutes = static_cast<int>(spacing / 60);
    }
    table.values = Tensor({s, n}, std::move(data));
    return table;
}

void write_signal_csv(const SignalTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "timestamp";
    for (const std::string& name : table.node_names) out << "," << name;
    out << "\n";
    for (int i = 0; i < table.rows(); ++i) {
        out << format_timestamp(table.timestamps[static_cast<std::size_t>(i)]);
        for (int j = 0; j < table.nodes(); ++j) out << "," << format_value(table.value(i, j));
        out << "\n";
    }
    if (!out) throw DataError("short write on " + path);
}

Tensor WindowedDataset::input_batch(std::span<const int> samples) const {
    const int b = static_cast<int>(samples.size());
    const int t = input_window, n = nodes(), c = channels();
    Tensor out({b, t, n, c});
    for (int bi = 0; bi < b; ++bi) {
        const int start = samples[static_cast<std::size_t>(bi)];
        for (int ti = 0; ti < t; ++ti) {
            const int row = start + ti;
            double tod = 0.0;
            if (time_of_day) {
                std::int64_t ts = table.timestamps[static_cast<std::size_t>(row)];
                std::int64_t day_secs = ((ts % 86400) + 86400) % 86400;
                tod = static_cast<double>(day_secs) / 86400.0;
            }
            for (int ni = 0; ni < n; ++ni) {
                double* cell = out.data() + ((static_cast<std::size_t>(bi) * t + ti) * n + ni) * c;
                cell[0] = scaler.apply(table.value(row, ni));
                if (c > 1) cell[1] = tod;
            }
        }
    }
    return out;
}

Tensor WindowedDataset::target_batch(std::span<const int> samples) const {
    const int b = static_cast<int>(samples.size());
    const int tp = output_window, n = nodes();
    Tensor out({b, tp, n});
    for (int bi = 0; bi < b; ++bi) {
        const int start = samples[static_cast<std::size_t>(bi)] + input_window;
        for (int ti = 0; ti < tp; ++ti)
            for (int ni = 0; ni < n; ++ni)
                out[(static_cast<std::size_t>(bi) * tp + ti) * n + ni] = table.value(start + ti, ni);
    }
    return out;
}

Tensor WindowedDataset::last_input_row(std::span<const int> samples) const {
    const int b = static_cast<int>(samples.size());
    const int n = nodes();
    Tensor out({b, n});
    for (int bi = 0; bi < b; ++bi) {
        const int row = samples[static_cast<std::size_t>(bi)] + input_window - 1;
        for (int ni = 0; ni < n; ++ni) out[static_cast<std::size_t>(bi) * n + ni] = table.value(row, ni);
    }
    return out;
}

std::int64_t WindowedDataset::window_end_timestamp(int sample) const {
    return table.timestamps[static_cast<std::size_t>(sample + input_window - 1)];
}

WindowedDataset make_windows(SignalTable table, int input_window, int output_window, bool time_of_day) {
    if (input_window < 1 || output_window < 1) throw ConfigError("windows must be at least one step long");
    const int s = table.rows();
    const int needed = input_window + output_window;
    if (s < needed) {
        throw LengthError("make_windows: " + std::to_string(s) + " rows, need at least " + std::to_string(needed) +
                          " for T=" + std::to_string(input_window) + ", T'=" + std::to_string(output_window));
    }
    WindowedDataset ds;
    ds.table = std::move(table);
    ds.input_window = input_window;
    ds.output_window = output_window;
    ds.time_of_day = time_of_day;
    ds.num_samples = s - needed + 1;
    return ds;
}

void chronological_split(WindowedDataset& ds, double train_frac, double val_frac, double test_frac) {
    if (train_frac < 0 || val_frac < 0 || test_frac < 0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be nonnegative and sum to 1");
    }
    const int n = ds.num_samples;
    const int b1 = static_cast<int>(std::llround(train_frac * n));
    const int b2 = static_cast<int>(std::llround((train_frac + val_frac) * n));
    ds.train = {0, b1};
    ds.val = {b1, b2};
    ds.test = {b2, n};
    if (ds.train.empty() || ds.val.empty() || ds.test.empty()) {
        throw ConfigError("split " + std::to_string(train_frac) + "/" + std::to_string(val_frac) + "/" +
                          std::to_string(test_frac) + " leaves an empty split for " + std::to_string(n) + " windows");
    }
}

void chronological_split_days(WindowedDataset& ds, int train_days, int val_days, int test_days) {
    if (train_days < 1 || val_days < 1 || test_days < 1) throw ConfigError("day counts must be positive");
    if (1440 % ds.table.frequency_minutes != 0) {
        throw ConfigError("day-based splits need a frequency dividing 24h, got " +
                          std::to_string(ds.table.frequency_minutes) + " min");
    }
    const int rows_per_day = 1440 / ds.table.frequency_minutes;
    const int r1 = train_days * rows_per_day;
    const int r2 = r1 + val_days * rows_per_day;
    const int r3 = r2 + test_days * rows_per_day;
    if (r3 > ds.table.rows()) {
        throw ConfigError("day split " + std::to_string(train_days) + "/" + std::to_string(val_days) + "/" +
                          std::to_string(test_days) + " needs " + std::to_string(r3) + " rows, table has " +
                          std::to_string(ds.table.rows()));
    }
    // sample i's last input row is i + T - 1; it belongs to the split whose
    // row range contains that row
    const int t = ds.input_window;
    auto boundary = [&](int row_limit) {
        return std::clamp(row_limit - t + 1, 0, ds.num_samples);
    };
    ds.train = {0, boundary(r1)};
    ds.val = {ds.train.end, boundary(r2)};
    ds.test = {ds.val.end, boundary(r3)};
    if (ds.train.empty() || ds.val.empty() || ds.test.empty()) {
        throw ConfigError("day split leaves an empty split");
    }
}

Scaler fit_scaler(WindowedDataset& ds, bool mask_zero) {
    if (ds.train.empty()) throw ConfigError("fit_scaler: empty train split");
    // rows covered by train-split inputs
    const int row_end = ds.train.end - 1 + ds.input_window;
    double sum = 0.0;
    std::size_t count = 0;
    for (int row = 0; row < row_end; ++row)
        for (int ni = 0; ni < ds.nodes(); ++ni) {
            const double v = ds.table.value(row, ni);
            if (mask_zero && v == 0.0) continue;
            sum += v;
            ++count;
        }
    if (count == 0) throw DataError("fit_scaler: every training entry is the missing sentinel");
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (int row = 0; row < row_end; ++row)
        for (int ni = 0; ni < ds.nodes(); ++ni) {
            const double v = ds.table.value(row, ni);
            if (mask_zero && v == 0.0) continue;
            sq += (v - mean) * (v - mean);
        }
    const double stddev = std::sqrt(sq / static_cast<double>(count));  // population convention
    if (stddev <= 0.0) throw DataError("fit_scaler: zero variance in training data");
    ds.scaler = Scaler{mean, stddev};
    return ds.scaler;
}

std::uint64_t split_hash(const WindowedDataset& ds) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(ds.num_samples));
    mix(static_cast<std::uint64_t>(ds.input_window));
    mix(static_cast<std::uint64_t>(ds.output_window));
    for (const SplitRange* r : {&ds.train, &ds.val, &ds.test}) {
        mix(static_cast<std::uint64_t>(r->begin));
        mix(static_cast<std::uint64_t>(r->end));
    }
    return h;
}

}  // namespace pgcn
