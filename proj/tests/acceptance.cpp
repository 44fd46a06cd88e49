// Acceptance suite: one pass/fail line per criterion. Exit code = number of
// failed (non-skipped) criteria. Criteria 9 and 10 need the real datasets
// (set PGCN_DATA_DIR or place metr-la.csv / pems-bay.csv / metr-la-edges.csv
// under ./data) and are reported as SKIP when those files are absent.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "helpers.hpp"
#include "pgcn/checkpoint.hpp"
#include "pgcn/errors.hpp"
#include "pgcn/grad_check.hpp"
#include "pgcn/metrics.hpp"
#include "pgcn/synthetic.hpp"
#include "pgcn/train.hpp"

using namespace pgcn;
using pgcn::testing::random_tensor;
using pgcn::testing::random_tensor_off_zero;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Result {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

int g_failures = 0;

void run_criterion(int number, const std::string& name, const std::function<Result()>& fn) {
    const auto t0 = Clock::now();
    Result r;
    try {
        r = fn();
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    const char* tag = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    std::printf("[%s] %2d. %s — %s [%.1f s]\n", tag, number, name.c_str(), r.detail.c_str(), secs);
    std::fflush(stdout);
    if (!r.pass && !r.skipped) ++g_failures;
}

// ---------------------------------------------------------------------
// shared context

struct Context {
    fs::path work = "acceptance_work";
    SyntheticData two_regime;           // 8 nodes, 2000 steps, regime swap at row 1000
    WindowedDataset ds;                 // windows over two_regime
    TransitionPair ring_trans;
    std::optional<PGCNModel> trained;   // criterion 6's model, reused by 7
    double ha_mae_60 = 0.0;
    std::string data_dir;

    PGCNConfig small_model_config() const {
        PGCNConfig c;
        c.num_layers = 2;
        c.hidden_dim = 16;
        c.dilations = {5, 6};  // receptive field = the full 12-step window
        c.skip_dim = 64;
        c.end_dim = 128;
        c.combo = {true, false, true};  // T+P
        return c;
    }
};

Context g_ctx;

void setup_context() {
    fs::remove_all(g_ctx.work);
    fs::create_directories(g_ctx.work);
    g_ctx.two_regime = generate_synthetic(SyntheticSpec::two_regime_default());
    g_ctx.ds = make_windows(g_ctx.two_regime.table, 12, 12);
    chronological_split(g_ctx.ds, 0.7, 0.1, 0.2);
    fit_scaler(g_ctx.ds, true);
    g_ctx.ring_trans = transition_matrix(RoadGraph::from_edges(8, ring_edges(8)));
    if (const char* env = std::getenv("PGCN_DATA_DIR")) {
        g_ctx.data_dir = env;
    } else {
        g_ctx.data_dir = "data";
    }
}

// gated temporal stack with the default dilation schedule, used by the
// causality and receptive-field probes
struct TemporalStack {
    std::vector<Parameter> filter_kernel, gate_kernel;
    std::vector<int> dilations;

    static TemporalStack make(std::uint64_t seed, int channels, std::vector<int> dilations) {
        TemporalStack s;
        s.dilations = std::move(dilations);
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < s.dilations.size(); ++i) {
            s.filter_kernel.emplace_back("g1", random_tensor(rng, {2, channels, channels}, -0.5, 0.5));
            s.gate_kernel.emplace_back("g2", random_tensor(rng, {2, channels, channels}, -0.5, 0.5));
        }
        return s;
    }

    std::vector<Tensor> forward(const Tensor& x) {
        Tape tape;
        Var h = tape.constant(x);
        std::vector<Tensor> outputs;
        for (std::size_t i = 0; i < dilations.size(); ++i) {
            h = gated_temporal_unit(tape, h, filter_kernel[i], gate_kernel[i], dilations[i]);
            outputs.push_back(h.value());
        }
        return outputs;
    }
};

// ---------------------------------------------------------------------

Result criterion_1_gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::mt19937_64 rng(101);
    auto check = [&](const char* /*label*/, std::vector<Parameter*> params,
                     const std::function<Var(Tape&, std::vector<Var>&)>& build) {
        Tensor contraction;
        auto loss_fn = [&]() {
            for (Parameter* p : params) p->zero_grad();
            Tape t;
            std::vector<Var> lifted;
            for (Parameter* p : params) lifted.push_back(t.param(*p));
            Var y = build(t, lifted);
            if (contraction.empty()) {
                std::mt19937_64 local(7);
                contraction = random_tensor(local, y.shape());
            }
            Var loss = t.sum(t.mul_const(y, contraction));
            t.backward(loss);
            return loss.value()[0];
        };
        worst = std::max(worst, grad_check(loss_fn, params, 1e-5));
    };

    {
        Parameter a("a", random_tensor(rng, {3, 4})), b("b", random_tensor(rng, {4, 2}));
        check("matmul", {&a, &b}, [](Tape& t, std::vector<Var>& v) { return t.matmul(v[0], v[1]); });
    }
    {
        Parameter x("x", random_tensor(rng, {4, 5}));
        check("row_softmax", {&x}, [](Tape& t, std::vector<Var>& v) { return t.row_softmax(v[0]); });
    }
    {
        Parameter x("x", random_tensor_off_zero(rng, {3, 4}));
        check("relu", {&x}, [](Tape& t, std::vector<Var>& v) { return t.relu(v[0]); });
        check("tanh", {&x}, [](Tape& t, std::vector<Var>& v) { return t.tanh(v[0]); });
        check("sigmoid", {&x}, [](Tape& t, std::vector<Var>& v) { return t.sigmoid(v[0]); });
        check("abs", {&x}, [](Tape& t, std::vector<Var>& v) { return t.abs(v[0]); });
    }
    {
        Parameter a("a", random_tensor(rng, {2, 5})), b("b", random_tensor(rng, {2, 5}));
        check("hadamard", {&a, &b}, [](Tape& t, std::vector<Var>& v) { return t.hadamard(v[0], v[1]); });
        check("add", {&a, &b}, [](Tape& t, std::vector<Var>& v) { return t.add(v[0], v[1]); });
        check("sub", {&a, &b}, [](Tape& t, std::vector<Var>& v) { return t.sub(v[0], v[1]); });
    }
    {
        Parameter x("x", random_tensor(rng, {2, 2, 6, 2})), k("k", random_tensor(rng, {2, 2, 3}));
        check("dilated_conv", {&x, &k},
              [](Tape& t, std::vector<Var>& v) { return t.dilated_causal_conv(v[0], v[1], 2); });
    }
    {
        Parameter adj("adj", random_tensor(rng, {2, 3, 3})), z("z", random_tensor(rng, {2, 3, 4, 2}));
        check("node_mix", {&adj, &z}, [](Tape& t, std::vector<Var>& v) { return t.node_mix(v[0], v[1]); });
    }
    {
        Parameter x("x", random_tensor(rng, {2, 3, 4, 3})), w("w", random_tensor(rng, {3, 4}));
        check("channel_map", {&x, &w}, [](Tape& t, std::vector<Var>& v) { return t.channel_map(v[0], v[1]); });
        check("crop_time", {&x}, [](Tape& t, std::vector<Var>& v) { return t.crop_time(v[0], 2); });
        check("bias/scale", {&x}, [](Tape& t, std::vector<Var>& v) { return t.affine(v[0], 1.3, 0.2); });
    }

    // composed tiny network: N=3, T=5, D=4, 2 layers, K=2, combo T+P
    PGCNConfig c;
    c.num_layers = 2;
    c.hidden_dim = 4;
    c.dilations = {1, 1};
    c.input_window = 5;
    c.output_window = 2;
    c.skip_dim = 8;
    c.end_dim = 16;
    c.combo = {true, false, true};
    PGCNModel model(c, 3, false, 21);
    TransitionPair tp = transition_matrix(RoadGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}, {1, 0, 2.0}}));
    Tensor x = random_tensor(rng, {2, 5, 3, 1});
    Tensor target = random_tensor(rng, {2, 2, 3}, 0.5, 1.5);
    Scaler scaler{0.0, 1.0};
    std::vector<Parameter*> params = model.parameters();
    auto loss_fn = [&]() {
        model.zero_grad();
        Tape tape;
        Var pred = model.forward(tape, x, &tp);
        Var loss = masked_mae_loss(tape, pred, target, scaler, false);
        tape.backward(loss);
        return loss.value()[0];
    };
    const double model_err = grad_check(loss_fn, params, 1e-5);
    worst = std::max(worst, model_err);

    const double secs = seconds_since(t0);
    std::ostringstream detail;
    detail << "max relative error " << worst << " (tiny model " << model_err << "), threshold 1e-4";
    if (secs >= 60.0) return {false, false, detail.str() + "; exceeded 60 s"};
    return {worst < 1e-4, false, detail.str()};
}

Result criterion_2_adjacency_invariants() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> n_dist(2, 6), b_dist(1, 4), t_dist(3, 8);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = n_dist(rng), b = b_dist(rng), t = t_dist(rng);
        Tensor windows = random_tensor(rng, {b, n, t}, 0.0, 70.0);
        AdjustorMatrix adjustor;
        adjustor.w = Parameter("adjustor", random_tensor(rng, {t, t}));
        Tape tape;
        Tensor ap = progressive_adjacency(tape, windows, adjustor).a_p.value();

        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < n; ++i) {
                double sum = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double w = ap.at({bi, i, j});
                    if (!(w > 0.0)) return {false, false, "non-positive entry at trial " + std::to_string(trial)};
                    sum += w;
                }
                if (std::fabs(sum - 1.0) > 1e-9)
                    return {false, false, "row sum off by " + std::to_string(sum - 1.0)};
            }

        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        Tensor permuted({b, n, t});
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < n; ++i)
                for (int ti = 0; ti < t; ++ti)
                    permuted.at({bi, perm[static_cast<std::size_t>(i)], ti}) = windows.at({bi, i, ti});
        Tape tape2;
        Tensor ap_perm = progressive_adjacency(tape2, permuted, adjustor).a_p.value();
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (ap_perm.at({bi, perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]}) !=
                        ap.at({bi, i, j})) {
                        return {false, false, "permutation equivariance broke at trial " + std::to_string(trial)};
                    }
                }

        if (b > 1) {
            Tensor edited = windows;
            for (int ti = 0; ti < t; ++ti) edited.at({0, 0, ti}) += 3.0;
            Tape tape3;
            Tensor ap_edit = progressive_adjacency(tape3, edited, adjustor).a_p.value();
            for (int bi = 1; bi < b; ++bi)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        if (ap_edit.at({bi, i, j}) != ap.at({bi, i, j}))
                            return {false, false, "per-sample purity broke at trial " + std::to_string(trial)};
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 30.0) return {false, false, "invariants hold but took " + std::to_string(secs) + " s (budget 30)"};
    return {true, false, "1000 instances: row-stochastic, positive, equivariant, pure"};
}

Result criterion_3_hand_oracle() {
    Tensor windows({1, 2, 3}, {0, 1, 2, 2, 1, 0});
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", Tensor::identity(3));
    Tape tape;
    Tensor ap = progressive_adjacency(tape, windows, adjustor).a_p.value();
    const double w00 = ap.at({0, 0, 0}), w01 = ap.at({0, 0, 1});
    std::ostringstream detail;
    detail << "A_p row 0 = [" << w00 << ", " << w01 << "], expected [0.6900, 0.3100] +- 1e-4";
    return {std::fabs(w00 - 0.6900) < 1e-4 && std::fabs(w01 - 0.3100) < 1e-4, false, detail.str()};
}

Result criterion_4_causality() {
    const std::vector<int> dilations = {1, 2, 1, 2, 1, 2, 1, 2};
    const int t_len = 13, channels = 4;  // padded default window
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        TemporalStack stack = TemporalStack::make(rng(), channels, dilations);
        Tensor x = random_tensor(rng, {1, 2, t_len, channels});
        std::vector<Tensor> base = stack.forward(x);

        std::uniform_int_distribution<int> tau_dist(0, t_len - 1);
        const int tau = tau_dist(rng);
        Tensor perturbed = x;
        for (int node = 0; node < 2; ++node)
            for (int ch = 0; ch < channels; ++ch) perturbed.at({0, node, tau, ch}) += 7.5;
        std::vector<Tensor> poked = stack.forward(perturbed);

        int offset = 0;
        for (std::size_t li = 0; li < dilations.size(); ++li) {
            offset += dilations[li];  // kernel_size 2: one step of history per tap
            const Tensor& a = base[li];
            const Tensor& b = poked[li];
            const int t_out = a.dim(2);
            for (int node = 0; node < 2; ++node)
                for (int t = 0; t < t_out; ++t) {
                    if (t + offset >= tau) continue;  // may legitimately change
                    for (int ch = 0; ch < channels; ++ch) {
                        if (a.at({0, node, t, ch}) != b.at({0, node, t, ch})) {
                            return {false, false,
                                    "layer " + std::to_string(li) + " changed at aligned index " +
                                        std::to_string(t + offset) + " < tau=" + std::to_string(tau)};
                        }
                    }
                }
        }
    }
    return {true, false, "100 trials: features aligned before tau bitwise unchanged"};
}

Result criterion_5_receptive_field() {
    PGCNConfig def;
    const int field = receptive_field(def);
    if (field != 13) return {false, false, "receptive_field(default) = " + std::to_string(field) + ", expected 13"};

    // empirical probe on a longer input: exactly the trailing 13 positions
    // must influence the last output position
    const std::vector<int> dilations = def.dilations;
    const int t_len = 30, channels = 4;
    std::mt19937_64 rng(505);
    TemporalStack stack = TemporalStack::make(909, channels, dilations);
    Tensor x = random_tensor(rng, {1, 1, t_len, channels});
    Tensor base = stack.forward(x).back();
    const int last = base.dim(2) - 1;

    for (int tau = 0; tau < t_len; ++tau) {
        Tensor perturbed = x;
        for (int ch = 0; ch < channels; ++ch) perturbed.at({0, 0, tau, ch}) += 9.0;
        Tensor out = stack.forward(perturbed).back();
        bool changed = false;
        for (int ch = 0; ch < channels; ++ch) changed |= out.at({0, 0, last, ch}) != base.at({0, 0, last, ch});
        const bool should_change = tau >= t_len - field;
        if (changed != should_change) {
            return {false, false, "position " + std::to_string(tau) + (changed ? " influenced" : " did not influence") +
                                      " the last output; expected the trailing 13 only"};
        }
    }
    return {true, false, "receptive_field(default) == 13 and the perturbation sweep agrees exactly"};
}

Result criterion_6_overfit() {
    const auto t0 = Clock::now();
    MetricsReport ha = evaluate(g_ctx.ds, g_ctx.ds.test, ha_predictor(g_ctx.ds), true);
    g_ctx.ha_mae_60 = ha.per_horizon[2].mae;

    PGCNModel model(g_ctx.small_model_config(), 8, g_ctx.ring_trans.undirected, 59);
    TrainOptions opts;
    opts.epochs = 200;
    opts.batch_size = 64;
    opts.seed = 11;
    opts.adam.lr = 5e-3;
    opts.mask_zero = true;
    TrainReport report = train(model, g_ctx.ds, &g_ctx.ring_trans, opts);
    if (report.diverged) return {false, false, "training diverged: " + report.divergence_note};

    const double first = report.epochs.front().train_mae;
    const double last = report.epochs.back().train_mae;
    MetricsReport m = evaluate(g_ctx.ds, g_ctx.ds.test, model_predictor(model, g_ctx.ds, &g_ctx.ring_trans), true);
    const double model_60 = m.per_horizon[2].mae;
    g_ctx.trained = std::move(model);

    const double secs = seconds_since(t0);
    std::ostringstream detail;
    detail << "train MAE " << first << " -> " << last << " (ratio " << last / first << " < 0.10), 60-min test MAE "
           << model_60 << " vs HA " << g_ctx.ha_mae_60;
    bool pass = last < 0.10 * first && model_60 < g_ctx.ha_mae_60;
    if (secs >= 600.0) {
        detail << "; exceeded 10 min budget (" << secs << " s)";
        pass = false;
    }
    return {pass, false, detail.str()};
}

Result criterion_7_drift() {
    if (!g_ctx.trained) return {false, false, "no trained model (criterion 6 failed)"};
    const int n = g_ctx.ds.nodes(), t = g_ctx.ds.input_window;
    int favorable = 0, total = 0;
    const int chunk = 64;
    for (int s0 = g_ctx.ds.test.begin; s0 < g_ctx.ds.test.end; s0 += chunk) {
        const int count = std::min(chunk, g_ctx.ds.test.end - s0);
        Tensor windows({count, n, t});
        for (int b = 0; b < count; ++b)
            for (int ni = 0; ni < n; ++ni)
                for (int ti = 0; ti < t; ++ti) windows.at({b, ni, ti}) = g_ctx.ds.table.value(s0 + b + ti, ni);
        Tape tape;
        Tensor ap = progressive_adjacency(tape, windows, g_ctx.trained->adjustor()).a_p.value();
        for (int b = 0; b < count; ++b) {
            const int last_row = s0 + b + t - 1;
            double same_sum = 0, diff_sum = 0;
            int same_n = 0, diff_n = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (g_ctx.two_regime.group_of(last_row, i) == g_ctx.two_regime.group_of(last_row, j)) {
                        same_sum += ap.at({b, i, j});
                        ++same_n;
                    } else {
                        diff_sum += ap.at({b, i, j});
                        ++diff_n;
                    }
                }
            if (same_sum / same_n > diff_sum / diff_n) ++favorable;
            ++total;
        }
    }
    const double pct = 100.0 * favorable / total;
    std::ostringstream detail;
    detail << "same-group mean weight exceeds different-group in " << favorable << "/" << total << " test windows ("
           << pct << "%), threshold 90%";
    return {pct >= 90.0, false, detail.str()};
}

Result criterion_8_metrics() {
    const double mae = masked_mae(Tensor({2}, {1, 3}), Tensor({2}, {2, 5}), false);
    const double rmse = masked_rmse(Tensor({2}, {1, 3}), Tensor({2}, {2, 5}), false);
    const double mape = masked_mape(Tensor({1}, {110}), Tensor({1}, {100}));
    if (std::fabs(mae - 1.5) > 1e-9) return {false, false, "MAE oracle: got " + std::to_string(mae)};
    if (std::fabs(rmse - std::sqrt(2.5)) > 1e-9) return {false, false, "RMSE oracle: got " + std::to_string(rmse)};
    if (std::fabs(mape - 10.0) > 1e-9) return {false, false, "MAPE oracle: got " + std::to_string(mape)};

    MetricsReport ha = evaluate(g_ctx.ds, g_ctx.ds.test, ha_predictor(g_ctx.ds), true);
    for (const auto& row : ha.per_horizon) {
        if (row.rmse < row.mae) return {false, false, "RMSE < MAE at horizon " + std::to_string(row.horizon_steps)};
    }
    if (ha.aggregate.rmse < ha.aggregate.mae) return {false, false, "aggregate RMSE < MAE"};
    return {true, false, "worked examples match to 1e-9; RMSE >= MAE on evaluation"};
}

Result criterion_9_ha_tables() {
    struct Case {
        const char* file;
        const char* name;
        double expected;
    };
    const Case cases[] = {{"metr-la.csv", "METR-LA", 4.02}, {"pems-bay.csv", "PeMS-Bay", 1.60}};
    std::ostringstream detail;
    bool any = false, all_ok = true;
    for (const Case& c : cases) {
        const fs::path path = fs::path(g_ctx.data_dir) / c.file;
        if (!fs::exists(path)) {
            detail << c.name << ": no " << path.string() << "; ";
            continue;
        }
        any = true;
        WindowedDataset ds = make_windows(load_signal_csv(path.string()), 12, 12);
        chronological_split(ds, 0.7, 0.1, 0.2);
        fit_scaler(ds, true);
        MetricsReport ha = evaluate(ds, ds.test, ha_predictor(ds), true);
        const double got = ha.per_horizon[0].mae;  // 15-minute
        const double rel = std::fabs(got - c.expected) / c.expected;
        detail << c.name << " HA 15-min MAE " << got << " vs " << c.expected << " (" << rel * 100 << "% off); ";
        if (rel > 0.05) all_ok = false;
    }
    if (!any) return {false, true, "dataset files not present — " + detail.str() + "criterion is conditional"};
    if (!all_ok) {
        detail << "deviation beyond 5% — check the zero-masking convention (missing values must be stored as 0 "
                  "and masked, split 0.7/0.1/0.2 over windows)";
    }
    return {all_ok, false, detail.str()};
}

Result criterion_10_scaled_learning() {
    const fs::path signals = fs::path(g_ctx.data_dir) / "metr-la.csv";
    const fs::path edges = fs::path(g_ctx.data_dir) / "metr-la-edges.csv";
    if (!fs::exists(signals) || !fs::exists(edges)) {
        return {false, true,
                "needs " + signals.string() + " and " + edges.string() + " — criterion is conditional"};
    }
    const auto t0 = Clock::now();
    SignalTable full = load_signal_csv(signals.string());
    const int keep = full.rows() / 10;  // first 10%
    SignalTable head;
    head.frequency_minutes = full.frequency_minutes;
    head.node_names = full.node_names;
    head.timestamps.assign(full.timestamps.begin(), full.timestamps.begin() + keep);
    std::vector<double> values(full.values.data(), full.values.data() + static_cast<std::size_t>(keep) * full.nodes());
    head.values = Tensor({keep, full.nodes()}, std::move(values));

    WindowedDataset ds = make_windows(std::move(head), 12, 12);
    chronological_split(ds, 0.7, 0.1, 0.2);
    fit_scaler(ds, true);
    MetricsReport ha = evaluate(ds, ds.test, ha_predictor(ds), true);

    RoadGraph graph = RoadGraph::load_edge_csv(edges.string()).aligned_to(ds.table.node_names);
    TransitionPair trans = transition_matrix(graph);
    PGCNConfig config;  // default architecture
    PGCNModel model(config, ds.nodes(), trans.undirected, 1);
    TrainOptions opts;
    opts.epochs = 20;
    opts.batch_size = 32;
    opts.seed = 1;
    opts.mask_zero = true;
    TrainReport report = train(model, ds, &trans, opts);
    if (report.diverged) return {false, false, "training diverged: " + report.divergence_note};

    MetricsReport m = evaluate(ds, ds.test, model_predictor(model, ds, &trans), true);
    const double secs = seconds_since(t0);
    std::ostringstream detail;
    detail << "PGCN 15-min test MAE " << m.per_horizon[0].mae << " vs HA " << ha.per_horizon[0].mae << " in " << secs
           << " s";
    bool pass = m.per_horizon[0].mae < ha.per_horizon[0].mae;
    if (secs > 7200.0) {
        detail << "; exceeded the 2 h budget";
        pass = false;
    }
    return {pass, false, detail.str()};
}

// small on-disk dataset shared by criteria 11 and 12
fs::path write_small_dataset() {
    const fs::path dir = g_ctx.work / "small_data";
    fs::create_directories(dir);
    SyntheticSpec spec;
    spec.nodes = 4;
    spec.length = 300;
    spec.noise = 0.05;
    spec.seed = 17;
    spec.regimes.push_back({0, {0, 0, 1, 1}});
    spec.regimes.push_back({150, {0, 1, 0, 1}});
    SyntheticData data = generate_synthetic(spec);
    write_signal_csv(data.table, (dir / "signals.csv").string());
    write_edge_csv((dir / "edges.csv").string(), data.table.node_names, ring_edges(4));
    return dir;
}

std::string small_run_config(const fs::path& data_dir, const fs::path& out_dir, int epochs) {
    std::ostringstream cfg;
    cfg << "data=" << (data_dir / "signals.csv").string() << "\n";
    cfg << "graph=" << (data_dir / "edges.csv").string() << "\n";
    cfg << "out=" << out_dir.string() << "\n";
    cfg << "epochs=" << epochs << "\nbatch_size=32\nseed=5\n";
    cfg << "num_layers=2\ndilations=5,6\nhidden_dim=8\nskip_dim=16\nend_dim=32\n";
    cfg << "adjacency_combo=T+P\nlr=0.005\n";
    return cfg.str();
}

Result criterion_11_ablation() {
    const fs::path data_dir = write_small_dataset();
    const fs::path out_dir = g_ctx.work / "ablation";
    const fs::path cfg_path = g_ctx.work / "ablate_config.txt";
    {
        std::ofstream cfg(cfg_path);
        cfg << small_run_config(data_dir, out_dir, 2);
    }
    const int rc = cli::run_cli({"ablate", "--config", cfg_path.string()});
    if (rc != 0) return {false, false, "cmd_ablate exited " + std::to_string(rc)};

    std::ifstream csv(out_dir / "ablation.csv");
    if (!csv) return {false, false, "ablation.csv missing"};
    std::string line;
    std::getline(csv, line);
    int rows = 0, labeled = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        for (const char* label : {"P,", "P + SA,", "T + SA,", "T + P (PGCN),", "T + P + SA,"}) {
            if (line.rfind(label, 0) == 0) {
                ++labeled;
                break;
            }
        }
    }
    std::ifstream log(out_dir / "ablation_log.txt");
    std::string log_text((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
    const bool has_hash = log_text.find("split_hash=") != std::string::npos;
    std::ostringstream detail;
    detail << rows << " result rows (" << labeled << " with canonical combo labels), split hash "
           << (has_hash ? "logged" : "MISSING");
    return {rows == 15 && labeled == 15 && has_hash, false, detail.str()};
}

Result criterion_12_determinism() {
    setenv("PGCN_THREADS", "1", 1);
    const fs::path data_dir = write_small_dataset();
    auto run_once = [&](const std::string& tag) {
        const fs::path out_dir = g_ctx.work / ("det_" + tag);
        const fs::path cfg_path = g_ctx.work / ("det_cfg_" + tag + ".txt");
        {
            std::ofstream cfg(cfg_path);
            cfg << small_run_config(data_dir, out_dir, 2);
        }
        if (cli::run_cli({"train", "--config", cfg_path.string()}) != 0) throw Error("train failed");
        if (cli::run_cli({"eval", "--checkpoint", (out_dir / "best.ckpt").string(), "--data",
                          (data_dir / "signals.csv").string(), "--graph", (data_dir / "edges.csv").string(),
                          "--out", (out_dir / "eval").string()}) != 0) {
            throw Error("eval failed");
        }
        return out_dir;
    };
    const fs::path a = run_once("a");
    const fs::path b = run_once("b");

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    // the seconds column is wall-clock metadata; every numeric column must
    // be bitwise identical
    auto strip_seconds = [](const std::string& csv) {
        std::istringstream in(csv);
        std::ostringstream out;
        std::string line;
        while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
        return out.str();
    };
    const bool log_same = strip_seconds(slurp(a / "train_log.csv")) == strip_seconds(slurp(b / "train_log.csv"));
    const bool metrics_same = slurp(a / "eval/metrics.csv") == slurp(b / "eval/metrics.csv");
    std::ostringstream detail;
    detail << "train_log.csv " << (log_same ? "bitwise identical" : "DIFFERS")
           << " (wall-clock seconds column excluded), metrics.csv "
           << (metrics_same ? "bitwise identical" : "DIFFERS") << ", PGCN_THREADS=1, two runs";
    return {log_same && metrics_same, false, detail.str()};
}

}  // namespace

int main() {
    std::printf("PGCN acceptance suite\n");
    setup_context();
    run_criterion(1, "gradient suite (< 1e-4, eps 1e-5, 64-bit)", criterion_1_gradients);
    run_criterion(2, "progressive adjacency invariants (1000 instances)", criterion_2_adjacency_invariants);
    run_criterion(3, "hand oracle A_p = [0.6900, 0.3100]", criterion_3_hand_oracle);
    run_criterion(4, "temporal-stack causality (100 trials)", criterion_4_causality);
    run_criterion(5, "receptive field 13 + perturbation sweep", criterion_5_receptive_field);
    run_criterion(6, "overfit oracle on two-regime synthetic", criterion_6_overfit);
    run_criterion(7, "drift detection via A_p group weights", criterion_7_drift);
    run_criterion(8, "metric oracles and RMSE >= MAE", criterion_8_metrics);
    run_criterion(9, "HA baseline vs published table (conditional)", criterion_9_ha_tables);
    run_criterion(10, "scaled-down learning check (conditional)", criterion_10_scaled_learning);
    run_criterion(11, "ablation harness (5 combos x 3 horizons)", criterion_11_ablation);
    run_criterion(12, "bitwise determinism of train/eval artifacts", criterion_12_determinism);
    if (g_failures == 0) {
        std::printf("acceptance: all non-skipped criteria passed\n");
    } else {
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    }
    return g_failures;
}
