#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pgcn/checkpoint.hpp"
#include "pgcn/data.hpp"
#include "pgcn/errors.hpp"
#include "pgcn/synthetic.hpp"
#include "pgcn/train.hpp"
#include "plot.hpp"

namespace pgcn::cli {

namespace fs = std::filesystem;

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw ConfigError("bad boolean for `" + key + "`: " + value);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string tok;
    std::istringstream is(s);
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(strip(tok)));
    return out;
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", s);
    return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    try {
        if (key == "data")
            data_path = value;
        else if (key == "graph")
            graph_path = value;
        else if (key == "out")
            out_dir = value;
        else if (key == "split")
            split = value;
        else if (key == "mask_zero")
            mask_zero = parse_bool(key, value);
        else if (key == "time_of_day")
            time_of_day = parse_bool(key, value);
        else if (key == "epochs")
            epochs = std::stoi(value);
        else if (key == "batch_size")
            batch_size = std::stoi(value);
        else if (key == "seed")
            seed = std::stoull(value);
        else if (key == "lr")
            lr = std::stod(value);
        else if (key == "beta1")
            beta1 = std::stod(value);
        else if (key == "beta2")
            beta2 = std::stod(value);
        else if (key == "eps_adam")
            eps_adam = std::stod(value);
        else if (key == "clip_norm")
            clip_norm = std::stod(value);
        else if (key == "num_layers")
            model.num_layers = std::stoi(value);
        else if (key == "hidden_dim")
            model.hidden_dim = std::stoi(value);
        else if (key == "dilations")
            model.dilations = parse_int_list(value);
        else if (key == "kernel_size")
            model.kernel_size = std::stoi(value);
        else if (key == "diffusion_steps")
            model.diffusion_steps = std::stoi(value);
        else if (key == "input_window")
            model.input_window = std::stoi(value);
        else if (key == "output_window")
            model.output_window = std::stoi(value);
        else if (key == "input_channels")
            model.input_channels = std::stoi(value);
        else if (key == "skip_dim")
            model.skip_dim = std::stoi(value);
        else if (key == "end_dim")
            model.end_dim = std::stoi(value);
        else if (key == "adjacency_combo")
            model.combo = AdjacencyCombo::parse(value);
        else if (key == "progressive_single_hop")
            model.progressive_single_hop = parse_bool(key, value);
        else if (key == "sa_embedding_dim")
            model.sa_embedding_dim = std::stoi(value);
        else
            throw ConfigError("unknown config key `" + key + "`");
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for `" + key + "`: " + value);
    }
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        try {
            cfg.set(strip(s.substr(0, eq)), strip(s.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# effective run configuration (fully resolved)\n";
    out << "data=" << data_path << "\n";
    out << "graph=" << graph_path << "\n";
    out << "out=" << out_dir << "\n";
    out << "split=" << split << "\n";
    out << "mask_zero=" << (mask_zero ? 1 : 0) << "\n";
    out << "time_of_day=" << (time_of_day ? 1 : 0) << "\n";
    out << "epochs=" << epochs << "\n";
    out << "batch_size=" << batch_size << "\n";
    out << "seed=" << seed << "\n";
    out << "lr=" << format_value(lr) << "\n";
    out << "beta1=" << format_value(beta1) << "\n";
    out << "beta2=" << format_value(beta2) << "\n";
    out << "eps_adam=" << format_value(eps_adam) << "\n";
    out << "clip_norm=" << format_value(clip_norm) << "\n";
    out << "num_layers=" << model.num_layers << "\n";
    out << "hidden_dim=" << model.hidden_dim << "\n";
    out << "dilations=";
    for (std::size_t i = 0; i < model.dilations.size(); ++i) out << (i ? "," : "") << model.dilations[i];
    out << "\n";
    out << "kernel_size=" << model.kernel_size << "\n";
    out << "diffusion_steps=" << model.diffusion_steps << "\n";
    out << "input_window=" << model.input_window << "\n";
    out << "output_window=" << model.output_window << "\n";
    out << "input_channels=" << model.input_channels << "\n";
    out << "skip_dim=" << model.skip_dim << "\n";
    out << "end_dim=" << model.end_dim << "\n";
    out << "adjacency_combo=" << model.combo.str() << "\n";
    out << "progressive_single_hop=" << (model.progressive_single_hop ? 1 : 0) << "\n";
    out << "sa_embedding_dim=" << model.sa_embedding_dim << "\n";
}

namespace {

struct LoadedData {
    WindowedDataset ds;
    std::optional<TransitionPair> trans;
    std::optional<RoadGraph> graph_as_loaded;  // first-seen node order from the edge file
};

void apply_split(WindowedDataset& ds, const std::string& spec) {
    if (spec.rfind("days:", 0) == 0) {
        std::vector<int> days = parse_int_list(spec.substr(5));
        if (days.size() != 3) throw ConfigError("split `" + spec + "`: expected days:<train>,<val>,<test>");
        chronological_split_days(ds, days[0], days[1], days[2]);
        return;
    }
    std::vector<double> fracs;
    std::string tok;
    std::istringstream is(spec);
    while (std::getline(is, tok, ',')) fracs.push_back(std::stod(strip(tok)));
    if (fracs.size() != 3) throw ConfigError("split `" + spec + "`: expected three fractions or days:a,b,c");
    chronological_split(ds, fracs[0], fracs[1], fracs[2]);
}

LoadedData prepare_data(const RunConfig& cfg, bool need_graph) {
    if (cfg.data_path.empty()) throw ConfigError("no data file given (set --data or data= in the config)");
    LoadedData out{make_windows(load_signal_csv(cfg.data_path), cfg.model.input_window, cfg.model.output_window,
                                cfg.time_of_day),
                   std::nullopt, std::nullopt};
    apply_split(out.ds, cfg.split);
    fit_scaler(out.ds, cfg.mask_zero);
    if (static_cast<int>(cfg.time_of_day ? 2 : 1) != cfg.model.input_channels) {
        throw ConfigError("input_channels=" + std::to_string(cfg.model.input_channels) +
                          " does not match time_of_day=" + (cfg.time_of_day ? std::string("1") : std::string("0")) +
                          " (expected " + (cfg.time_of_day ? "2" : "1") + ")");
    }
    if (need_graph) {
        if (cfg.graph_path.empty()) {
            throw ConfigError("adjacency combo includes T; an edge-list file is required (--graph)");
        }
        RoadGraph g = RoadGraph::load_edge_csv(cfg.graph_path);
        out.trans = transition_matrix(g.aligned_to(out.ds.table.node_names));
        out.graph_as_loaded = std::move(g);
    }
    return out;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "horizon_steps,horizon_minutes,mae,rmse,mape_percent,count\n";
    auto row = [&out](const MetricsReport::Row& r) {
        out << r.horizon_steps << "," << r.horizon_minutes << "," << format_value(r.mae) << ","
            << format_value(r.rmse) << "," << format_value(r.mape_percent) << "," << r.count << "\n";
    };
    for (const auto& r : report.per_horizon) row(r);
    row(report.aggregate);
}

void print_metrics(const MetricsReport& report) {
    std::printf("%-10s %10s %10s %10s\n", "horizon", "mae", "rmse", "mape%");
    for (const auto& r : report.per_horizon) {
        std::printf("%6d min %10.4f %10.4f %10.4f\n", r.horizon_minutes, r.mae, r.rmse, r.mape_percent);
    }
    std::printf("%-10s %10.4f %10.4f %10.4f\n", "all", report.aggregate.mae, report.aggregate.rmse,
                report.aggregate.mape_percent);
}

TrainOptions train_options(const RunConfig& cfg, const std::string& checkpoint_path) {
    TrainOptions opts;
    opts.epochs = cfg.epochs;
    opts.batch_size = cfg.batch_size;
    opts.seed = cfg.seed;
    opts.adam = AdamSettings{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam, cfg.clip_norm};
    opts.mask_zero = cfg.mask_zero;
    opts.checkpoint_path = checkpoint_path;
    return opts;
}

int cmd_train(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    cfg.save((fs::path(cfg.out_dir) / "run_config.txt").string());

    LoadedData data = prepare_data(cfg, cfg.model.combo.transition);
    if (data.graph_as_loaded) {
        data.graph_as_loaded->write_node_index_csv((fs::path(cfg.out_dir) / "node_index.csv").string());
    }
    PGCNModel model(cfg.model, data.ds.nodes(), data.trans ? data.trans->undirected : false, cfg.seed);
    std::printf("training: %d nodes, %d windows (train %d / val %d / test %d), %zu parameters\n", data.ds.nodes(),
                data.ds.num_samples, data.ds.train.size(), data.ds.val.size(), data.ds.test.size(),
                model.parameter_count());

    std::ofstream log((fs::path(cfg.out_dir) / "train_log.csv").string());
    if (!log) throw DataError("cannot write train_log.csv in " + cfg.out_dir);
    log << "epoch,train_mae,val_mae,seconds\n";

    TrainOptions opts = train_options(cfg, (fs::path(cfg.out_dir) / "best.ckpt").string());
    opts.on_epoch = [&log](int epoch, double train_mae, double val_mae, double seconds) {
        log << epoch << "," << format_value(train_mae) << "," << format_value(val_mae) << ","
            << fmt_seconds(seconds) << "\n";
        log.flush();
        std::printf("epoch %4d  train %.4f  val %.4f  (%.1fs)\n", epoch, train_mae, val_mae, seconds);
    };

    const TransitionPair* trans = data.trans ? &*data.trans : nullptr;
    TrainReport report = train(model, data.ds, trans, opts);
    if (report.diverged) {
        std::fprintf(stderr, "pgcn train: diverged: %s\n", report.divergence_note.c_str());
        return 4;
    }
    if (report.best_epoch > 0) {
        std::printf("best epoch %d (val MAE %.4f), checkpoint %s\n", report.best_epoch, report.best_val_mae,
                    report.best_checkpoint.c_str());
    }
    return 0;
}

SplitRange pick_split(const WindowedDataset& ds, const std::string& name) {
    if (name == "train") return ds.train;
    if (name == "val" || name == "validation") return ds.val;
    if (name == "test") return ds.test;
    throw ConfigError("unknown split `" + name + "` (expected train, val or test)");
}

int cmd_eval(RunConfig cfg, const std::string& checkpoint, const std::string& split_name,
             const std::string& baseline) {
    const bool use_ha = baseline == "ha";
    if (!use_ha && !baseline.empty()) throw ConfigError("unknown baseline `" + baseline + "` (supported: ha)");
    if (!use_ha && checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --baseline ha");

    std::optional<PGCNModel> model;
    if (!use_ha) {
        model.emplace(load_checkpoint(checkpoint));
        cfg.model = model->config();
        cfg.time_of_day = cfg.model.input_channels == 2;
    }
    LoadedData data = prepare_data(cfg, !use_ha && cfg.model.combo.transition);
    if (model && model->num_nodes() != data.ds.nodes()) {
        throw DimensionError("checkpoint num_nodes=" + std::to_string(model->num_nodes()) +
                             " conflicts with data (" + std::to_string(data.ds.nodes()) + " nodes)");
    }

    const TransitionPair* trans = data.trans ? &*data.trans : nullptr;
    BatchPredictor predictor = use_ha ? ha_predictor(data.ds) : model_predictor(*model, data.ds, trans);
    MetricsReport report = evaluate(data.ds, pick_split(data.ds, split_name), predictor, cfg.mask_zero);

    fs::create_directories(cfg.out_dir);
    write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), report);
    print_metrics(report);
    return 0;
}

int cmd_ablate(const RunConfig& base) {
    struct Combo {
        AdjacencyCombo combo;
        const char* label;
        const char* slug;
    };
    const Combo combos[] = {
        {{false, false, true}, "P", "p"},
        {{false, true, true}, "P + SA", "p_sa"},
        {{true, true, false}, "T + SA", "t_sa"},
        {{true, false, true}, "T + P (PGCN)", "t_p"},
        {{true, true, true}, "T + P + SA", "t_p_sa"},
    };

    fs::create_directories(base.out_dir);
    base.save((fs::path(base.out_dir) / "run_config.txt").string());
    LoadedData data = prepare_data(base, /*need_graph=*/true);  // T combos need the edge list
    const std::uint64_t hash = split_hash(data.ds);

    std::ofstream log_file((fs::path(base.out_dir) / "ablation_log.txt").string());
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx", static_cast<unsigned long long>(hash));
    log_file << "split_hash=" << hash_hex << "\n";
    std::printf("ablation over 5 graph-convolution combos, shared split hash %s\n", hash_hex);

    struct ResultRow {
        std::string combo;
        int horizon_minutes;
        double mae, rmse, mape;
    };
    std::vector<ResultRow> rows;
    int failures = 0;
    for (const Combo& c : combos) {
        RunConfig cfg = base;
        cfg.model.combo = c.combo;
        cfg.out_dir = (fs::path(base.out_dir) / (std::string("combo_") + c.slug)).string();
        try {
            fs::create_directories(cfg.out_dir);
            cfg.save((fs::path(cfg.out_dir) / "run_config.txt").string());
            PGCNModel model(cfg.model, data.ds.nodes(), data.trans ? data.trans->undirected : false, cfg.seed);
            std::ofstream tl((fs::path(cfg.out_dir) / "train_log.csv").string());
            tl << "epoch,train_mae,val_mae,seconds\n";
            TrainOptions opts = train_options(cfg, (fs::path(cfg.out_dir) / "best.ckpt").string());
            opts.on_epoch = [&tl](int epoch, double train_mae, double val_mae, double seconds) {
                tl << epoch << "," << format_value(train_mae) << "," << format_value(val_mae) << ","
                   << fmt_seconds(seconds) << "\n";
            };
            const TransitionPair* trans = c.combo.transition ? &*data.trans : nullptr;
            TrainReport report = train(model, data.ds, trans, opts);
            if (report.diverged) throw NumericError("diverged: " + report.divergence_note);
            PGCNModel best = report.best_checkpoint.empty() ? std::move(model)
                                                            : load_checkpoint(report.best_checkpoint);
            MetricsReport metrics =
                evaluate(data.ds, data.ds.test, model_predictor(best, data.ds, trans), cfg.mask_zero);
            for (const auto& r : metrics.per_horizon) {
                rows.push_back({c.label, r.horizon_minutes, r.mae, r.rmse, r.mape_percent});
            }
            log_file << c.label << ": ok (best val MAE " << format_value(report.best_val_mae) << ")\n";
            std::printf("combo %-14s test MAPE%%: %.3f / %.3f / %.3f\n", c.label,
                        metrics.per_horizon[0].mape_percent, metrics.per_horizon[1].mape_percent,
                        metrics.per_horizon[2].mape_percent);
        } catch (const Error& e) {
            ++failures;
            log_file << c.label << ": FAILED: " << e.what() << "\n";
            std::fprintf(stderr, "pgcn ablate: combo %s failed: %s\n", c.label, e.what());
        }
    }

    std::ofstream out((fs::path(base.out_dir) / "ablation.csv").string());
    if (!out) throw DataError("cannot write ablation.csv in " + base.out_dir);
    out << "combo,horizon_minutes,mae,rmse,mape_percent\n";
    for (const ResultRow& r : rows) {
        out << r.combo << "," << r.horizon_minutes << "," << format_value(r.mae) << "," << format_value(r.rmse)
            << "," << format_value(r.mape) << "\n";
    }
    return failures == 5 ? 4 : 0;
}

int cmd_export_adjacency(const RunConfig& cfg, const std::string& checkpoint, const std::string& node_pair,
                         const std::string& from_ts, const std::string& to_ts, const std::string& at_ts) {
    CheckpointMeta meta;
    PGCNModel model = load_checkpoint(checkpoint, &meta);
    if (!model.config().combo.progressive) {
        throw ConfigError("checkpoint's adjacency combo " + model.config().combo.str() +
                          " has no progressive term; nothing to export");
    }
    if (cfg.data_path.empty()) throw ConfigError("export-adjacency needs --data");
    SignalTable table = load_signal_csv(cfg.data_path);
    const int t = model.config().input_window;
    const int n = table.nodes();
    if (model.num_nodes() != n) {
        throw DimensionError("checkpoint num_nodes=" + std::to_string(model.num_nodes()) +
                             " conflicts with data (" + std::to_string(n) + " nodes)");
    }
    const int num_windows = table.rows() - t - model.config().output_window + 1;
    if (num_windows < 1) throw LengthError("series too short for one window");

    fs::create_directories(cfg.out_dir);

    auto window_matrix = [&](int start, int count) {
        Tensor windows({count, n, t});
        for (int b = 0; b < count; ++b)
            for (int ni = 0; ni < n; ++ni)
                for (int ti = 0; ti < t; ++ti) windows.at({b, ni, ti}) = table.value(start + b + ti, ni);
        return windows;
    };

    if (!at_ts.empty()) {
        // full-matrix dump at one timestamp (= a window's last input row)
        const std::int64_t at = parse_timestamp(at_ts);
        int found = -1;
        for (int s = 0; s < num_windows; ++s) {
            if (table.timestamps[static_cast<std::size_t>(s + t - 1)] == at) {
                found = s;
                break;
            }
        }
        if (found < 0) {
            throw ConfigError("no window ends at " + at_ts + " (valid ends: " +
                              format_timestamp(table.timestamps[static_cast<std::size_t>(t - 1)]) + " .. " +
                              format_timestamp(table.timestamps[static_cast<std::size_t>(num_windows + t - 2)]) +
                              ")");
        }
        Tape tape;
        Tensor ap = progressive_adjacency(tape, window_matrix(found, 1), model.adjustor()).a_p.value();
        const std::string path = (fs::path(cfg.out_dir) / "adjacency_matrix.csv").string();
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path);
        out << "node";
        for (const std::string& name : table.node_names) out << "," << name;
        out << "\n";
        for (int i = 0; i < n; ++i) {
            out << table.node_names[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) out << "," << format_value(ap.at({0, i, j}));
            out << "\n";
        }
        std::printf("wrote %s (window ending %s)\n", path.c_str(), at_ts.c_str());
        return 0;
    }

    // node pair trace
    auto comma = node_pair.find(',');
    if (node_pair.empty() || comma == std::string::npos) {
        throw ConfigError("export-adjacency needs --nodes <name_i>,<name_j>");
    }
    auto find_node = [&](const std::string& name) {
        for (int i = 0; i < n; ++i)
            if (table.node_names[static_cast<std::size_t>(i)] == name) return i;
        std::string candidates;
        for (int i = 0; i < std::min(n, 8); ++i) {
            if (i) candidates += ", ";
            candidates += table.node_names[static_cast<std::size_t>(i)];
        }
        if (n > 8) candidates += ", ...";
        throw ConfigError("unknown node `" + name + "`; data has: " + candidates);
    };
    const int node_i = find_node(strip(node_pair.substr(0, comma)));
    const int node_j = find_node(strip(node_pair.substr(comma + 1)));

    std::int64_t lo = from_ts.empty() ? std::numeric_limits<std::int64_t>::min() : parse_timestamp(from_ts);
    std::int64_t hi = to_ts.empty() ? std::numeric_limits<std::int64_t>::max() : parse_timestamp(to_ts);
    std::vector<int> starts;
    for (int s = 0; s < num_windows; ++s) {
        const std::int64_t end_ts = table.timestamps[static_cast<std::size_t>(s + t - 1)];
        if (end_ts >= lo && end_ts <= hi) starts.push_back(s);
    }
    if (starts.empty()) throw ConfigError("no windows end inside the requested time range");

    const std::string path = (fs::path(cfg.out_dir) / "adjacency_trace.csv").string();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "timestamp,speed_i,speed_j,weight_ij,weight_ji,weight_ij_ma12\n";
    std::vector<double> history;  // trailing 12-window moving average of weight_ij
    const int chunk = 256;
    for (std::size_t pos = 0; pos < starts.size(); pos += chunk) {
        const int count = static_cast<int>(std::min<std::size_t>(chunk, starts.size() - pos));
        // window starts inside a chunk are consecutive only if the range is;
        // build per chunk to bound memory
        Tensor windows({count, n, t});
        for (int b = 0; b < count; ++b) {
            const int start = starts[pos + static_cast<std::size_t>(b)];
            for (int ni = 0; ni < n; ++ni)
                for (int ti = 0; ti < t; ++ti) windows.at({b, ni, ti}) = table.value(start + ti, ni);
        }
        Tape tape;
        Tensor ap = progressive_adjacency(tape, windows, model.adjustor()).a_p.value();
        for (int b = 0; b < count; ++b) {
            const int start = starts[pos + static_cast<std::size_t>(b)];
            const int end_row = start + t - 1;
            const double w_ij = ap.at({b, node_i, node_j});
            history.push_back(w_ij);
            const std::size_t take = std::min<std::size_t>(12, history.size());
            double ma = 0.0;
            for (std::size_t k = history.size() - take; k < history.size(); ++k) ma += history[k];
            ma /= static_cast<double>(take);
            out << format_timestamp(table.timestamps[static_cast<std::size_t>(end_row)]) << ","
                << format_value(table.value(end_row, node_i)) << "," << format_value(table.value(end_row, node_j))
                << "," << format_value(w_ij) << "," << format_value(ap.at({b, node_j, node_i})) << ","
                << format_value(ma) << "\n";
        }
    }
    std::printf("wrote %s (%zu windows)\n", path.c_str(), starts.size());
    return 0;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty CSV");
    {
        std::istringstream is(strip(line));
        std::string tok;
        while (std::getline(is, tok, ',')) header.push_back(tok);
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        std::string s = strip(line);
        if (s.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, ',')) fields.push_back(tok);
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw ConfigError(path + ": empty CSV");
    return rows;
}

int cmd_plot(const std::string& input, const std::string& kind, std::string out_path) {
    if (out_path.empty()) out_path = input + ".svg";
    std::vector<std::string> header;
    auto rows = read_csv(input, header);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError(input + ": column `" + name + "` not found; is this a " + kind + " file?");
    };

    std::vector<Series> series;
    if (kind == "train-log") {
        const std::size_t ce = column("epoch"), ct = column("train_mae"), cv = column("val_mae");
        Series train{"train_mae", {}, {}, "#1f77b4", 0};
        Series val{"val_mae", {}, {}, "#d62728", 0};
        for (const auto& r : rows) {
            train.x.push_back(std::stod(r[ce]));
            train.y.push_back(std::stod(r[ct]));
            val.x.push_back(std::stod(r[ce]));
            val.y.push_back(std::stod(r[cv]));
        }
        series = {train, val};
        render_svg(out_path, "training curve: " + input, series, 1, {"MAE (original units)"});
    } else if (kind == "adjacency-trace") {
        const std::size_t ci = column("speed_i"), cj = column("speed_j");
        const std::size_t cw = column("weight_ij"), cwr = column("weight_ji"), cm = column("weight_ij_ma12");
        Series si{"speed_i", {}, {}, "#1f77b4", 0}, sj{"speed_j", {}, {}, "#d62728", 0};
        Series w{"weight_ij", {}, {}, "#9ecae1", 1}, wr{"weight_ji", {}, {}, "#fdae6b", 1},
            ma{"weight_ij_ma12", {}, {}, "#d62728", 1};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double x = static_cast<double>(i);
            si.x.push_back(x);
            si.y.push_back(std::stod(rows[i][ci]));
            sj.x.push_back(x);
            sj.y.push_back(std::stod(rows[i][cj]));
            w.x.push_back(x);
            w.y.push_back(std::stod(rows[i][cw]));
            wr.x.push_back(x);
            wr.y.push_back(std::stod(rows[i][cwr]));
            ma.x.push_back(x);
            ma.y.push_back(std::stod(rows[i][cm]));
        }
        series = {si, sj, w, wr, ma};
        render_svg(out_path, "speeds and progressive weights: " + input, series, 2,
                   {"traffic signal", "adjacency weight"});
    } else {
        throw ConfigError("unknown plot kind `" + kind + "` (supported: train-log, adjacency-trace)");
    }
    std::printf("wrote %s and %s\n", out_path.c_str(), (out_path + ".data.csv").c_str());
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    SyntheticSpec spec = spec_path.empty() ? SyntheticSpec::two_regime_default() : SyntheticSpec::load(spec_path);
    SyntheticData data = generate_synthetic(spec);
    fs::create_directories(out_dir);
    write_signal_csv(data.table, (fs::path(out_dir) / "signals.csv").string());
    write_edge_csv((fs::path(out_dir) / "edges.csv").string(), data.table.node_names,
                   ring_edges(data.table.nodes()));
    spec.save((fs::path(out_dir) / "synthetic_spec.txt").string());
    {
        std::ofstream groups((fs::path(out_dir) / "groups.csv").string());
        groups << "timestamp";
        for (const auto& name : data.table.node_names) groups << "," << name;
        groups << "\n";
        for (int row = 0; row < data.table.rows(); ++row) {
            groups << format_timestamp(data.table.timestamps[static_cast<std::size_t>(row)]);
            for (int ni = 0; ni < data.table.nodes(); ++ni) groups << "," << data.group_of(row, ni);
            groups << "\n";
        }
    }
    std::printf("wrote %s/{signals.csv,edges.csv,groups.csv,synthetic_spec.txt} (%d rows, %d nodes)\n",
                out_dir.c_str(), data.table.rows(), data.table.nodes());
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"progressive graph convolutional network for spatial-temporal traffic forecasting"};
    app.require_subcommand(1);

    std::string config_path, data_path, graph_path, out_dir, checkpoint, split_name = "test";
    std::string baseline, node_pair, from_ts, to_ts, at_ts, plot_input, plot_kind = "train-log", plot_out;
    std::string spec_path;
    std::optional<std::uint64_t> seed_flag;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value run configuration file");
        cmd->add_option("--data", data_path, "signal CSV (timestamp,<sensor>,...)");
        cmd->add_option("--graph", graph_path, "edge-list CSV (from,to[,weight])");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed_flag, "RNG seed override");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a model and keep the best-validation checkpoint");
    add_common(train_cmd);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (or the HA baseline) on a split");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint manifest path");
    eval_cmd->add_option("--split", split_name, "train / val / test (default test)");
    eval_cmd->add_option("--baseline", baseline, "evaluate a baseline instead (supported: ha)");

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "train and evaluate all five adjacency combinations");
    add_common(ablate_cmd);

    CLI::App* export_cmd =
        app.add_subcommand("export-adjacency", "emit progressive adjacency weights over time for a node pair");
    add_common(export_cmd);
    export_cmd->add_option("--checkpoint", checkpoint, "checkpoint manifest path")->required();
    export_cmd->add_option("--nodes", node_pair, "pair of sensor names, e.g. 401936,400222");
    export_cmd->add_option("--from", from_ts, "first window-end timestamp (YYYY-MM-DD HH:MM:SS)");
    export_cmd->add_option("--to", to_ts, "last window-end timestamp");
    export_cmd->add_option("--at", at_ts, "dump the full matrix for the window ending at this timestamp");

    CLI::App* plot_cmd = app.add_subcommand("plot", "render a CSV produced by this tool as an SVG");
    plot_cmd->add_option("--input", plot_input, "CSV to plot")->required();
    plot_cmd->add_option("--kind", plot_kind, "train-log or adjacency-trace");
    plot_cmd->add_option("--out", plot_out, "output SVG path (default <input>.svg)");

    CLI::App* synth_cmd = app.add_subcommand("synth", "materialize a synthetic dataset with known group structure");
    synth_cmd->add_option("--spec", spec_path, "synthetic spec file (omit for the two-regime default)");
    synth_cmd->add_option("--out", out_dir, "output directory")->required();

    std::vector<const char*> argv;
    argv.push_back("pgcn");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::load(config_path);
        if (!data_path.empty()) cfg.data_path = data_path;
        if (!graph_path.empty()) cfg.graph_path = graph_path;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_flag) cfg.seed = *seed_flag;

        if (train_cmd->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_eval(cfg, checkpoint, split_name, baseline);
        if (ablate_cmd->parsed()) return cmd_ablate(cfg);
        if (export_cmd->parsed()) return cmd_export_adjacency(cfg, checkpoint, node_pair, from_ts, to_ts, at_ts);
        if (plot_cmd->parsed()) return cmd_plot(plot_input, plot_kind, plot_out);
        if (synth_cmd->parsed()) return cmd_synth(spec_path, cfg.out_dir);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "pgcn: config error: %s\n", e.what());
        return 2;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "pgcn: config error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "pgcn: data error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "pgcn: data error: %s\n", e.what());
        return 3;
    } catch (const LengthError& e) {
        std::fprintf(stderr, "pgcn: data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "pgcn: numeric failure: %s\n", e.what());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "pgcn: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pgcn: %s\n", e.what());
        return 1;
    }
}

}  // namespace pgcn::cli
