#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "pgcn/errors.hpp"
#include "pgcn/grad_check.hpp"
#include "pgcn/graph.hpp"

using namespace pgcn;
using pgcn::testing::random_tensor;

namespace {

RoadGraph graph_from_matrix(Tensor a) {
    RoadGraph g;
    g.num_nodes = a.dim(0);
    for (int i = 0; i < g.num_nodes; ++i) g.node_names.push_back(std::to_string(i));
    g.adjacency = std::move(a);
    return g;
}

}  // namespace

TEST_CASE("transition matrix on an already stochastic permutation graph") {
    TransitionPair tp = transition_matrix(graph_from_matrix(Tensor({2, 2}, {0, 1, 1, 0})));
    CHECK(tp.forward.at({0, 1}) == 1.0);
    CHECK(tp.forward.at({1, 0}) == 1.0);
    CHECK(tp.undirected);
}

TEST_CASE("transition matrix splits rows proportionally") {
    TransitionPair tp = transition_matrix(graph_from_matrix(Tensor({3, 3}, {2, 0, 2, 0, 1, 0, 1, 1, 0})));
    CHECK(tp.forward.at({0, 0}) == doctest::Approx(0.5));
    CHECK(tp.forward.at({0, 1}) == 0.0);
    CHECK(tp.forward.at({0, 2}) == doctest::Approx(0.5));
}

TEST_CASE("isolated node yields an all-zero row without NaN") {
    TransitionPair tp = transition_matrix(graph_from_matrix(Tensor({2, 2}, {0, 1, 0, 0})));
    CHECK(tp.forward.at({1, 0}) == 0.0);
    CHECK(tp.forward.at({1, 1}) == 0.0);
    CHECK(tp.forward.all_finite());
    // backward direction: node 0 has no in-edges, so its backward row is zero
    CHECK(tp.backward.at({0, 0}) == 0.0);
    CHECK(tp.backward.at({0, 1}) == 0.0);
}

TEST_CASE("negative adjacency entries are a domain error") {
    CHECK_THROWS_AS(transition_matrix(graph_from_matrix(Tensor({2, 2}, {0, -1, 1, 0}))), DomainError);
}

TEST_CASE("undirected graphs share one transition matrix exactly") {
    std::mt19937_64 rng(3);
    Tensor a({4, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            double w = random_tensor(rng, {1}, 0.0, 2.0)[0];
            a.at({i, j}) = w;
            a.at({j, i}) = w;
        }
    TransitionPair tp = transition_matrix(graph_from_matrix(a));
    CHECK(tp.undirected);
    CHECK(bitwise_equal(tp.forward, tp.backward));
}

TEST_CASE("transition_matrix is idempotent on row-stochastic inputs") {
    std::mt19937_64 rng(11);
    Tensor a = random_tensor(rng, {4, 4}, 0.05, 1.0);
    TransitionPair first = transition_matrix(graph_from_matrix(a));
    TransitionPair second = transition_matrix(graph_from_matrix(first.forward));
    CHECK(max_abs_diff(first.forward, second.forward) < 1e-12);
}

TEST_CASE("normalize_window hand oracle") {
    auto out = normalize_window({0, 1, 2});
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(0.4472).epsilon(1e-4));
    CHECK(out[2] == doctest::Approx(0.8944).epsilon(1e-4));
}

TEST_CASE("constant windows normalize to the zero vector") {
    auto out = normalize_window({5, 5, 5});
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("normalize_window is a fixed point on its own output") {
    std::vector<double> x = {0.0, 0.25, 0.7, 1.0};  // strictly increasing, hits 0 and 1
    auto once = normalize_window(x);
    auto twice = normalize_window(once);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-15));
}

TEST_CASE("progressive adjacency hand oracle (N=2, T=3, identity adjustor)") {
    Tensor windows({1, 2, 3}, {0, 1, 2, 2, 1, 0});
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", Tensor::identity(3));
    Tape tape;
    ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor, /*keep_scores=*/true);
    REQUIRE(pa.scores.has_value());
    CHECK(pa.scores->at({0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pa.scores->at({0, 0, 1}) == doctest::Approx(0.2).epsilon(1e-9));
    const Tensor& ap = pa.a_p.value();
    CHECK(ap.at({0, 0, 0}) == doctest::Approx(0.6900).epsilon(1e-4));
    CHECK(ap.at({0, 0, 1}) == doctest::Approx(0.3100).epsilon(1e-4));
}

TEST_CASE("identical non-constant windows give uniform rows") {
    Tensor windows({1, 3, 4});
    for (int n = 0; n < 3; ++n)
        for (int t = 0; t < 4; ++t) windows.at({0, n, t}) = 1.0 + t;
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", Tensor::identity(4));
    Tape tape;
    ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor);
    const Tensor& ap = pa.a_p.value();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(ap.at({0, i, j}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("identical windows score 1 against themselves and each other") {
    Tensor windows({1, 2, 5});
    for (int n = 0; n < 2; ++n)
        for (int t = 0; t < 5; ++t) windows.at({0, n, t}) = std::sin(0.7 * t) + 2.0;
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", Tensor::identity(5));
    Tape tape;
    ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor, true);
    CHECK(pa.scores->at({0, 0, 1}) == pa.scores->at({0, 0, 0}));  // identical arithmetic
    CHECK(pa.scores->at({0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetric adjustor gives a symmetric score matrix") {
    std::mt19937_64 rng(7);
    Tensor windows = random_tensor(rng, {2, 4, 6}, 0.0, 60.0);
    Tensor sym = random_tensor(rng, {6, 6});
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < i; ++j) sym.at({i, j}) = sym.at({j, i});
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", sym);
    Tape tape;
    ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor, true);
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(std::fabs(pa.scores->at({b, i, j}) - pa.scores->at({b, j, i})) < 1e-12);
}

TEST_CASE("progressive adjacency rejects window/adjustor length mismatch") {
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", Tensor::identity(4));
    Tape tape;
    CHECK_THROWS_AS(progressive_adjacency(tape, Tensor({1, 2, 3}), adjustor), DimensionError);
}

TEST_CASE("progressive adjacency invariants over random instances") {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> n_dist(2, 6), b_dist(1, 4), t_dist(3, 8);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = n_dist(rng), b = b_dist(rng), t = t_dist(rng);
        Tensor windows = random_tensor(rng, {b, n, t}, 0.0, 70.0);
        AdjustorMatrix adjustor;
        adjustor.w = Parameter("adjustor", random_tensor(rng, {t, t}));

        Tape tape;
        Tensor ap = progressive_adjacency(tape, windows, adjustor).a_p.value();

        // row-stochastic with strictly positive entries
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < n; ++i) {
                double sum = 0.0;
                for (int j = 0; j < n; ++j) {
                    CHECK(ap.at({bi, i, j}) > 0.0);
                    sum += ap.at({bi, i, j});
                }
                CHECK(std::fabs(sum - 1.0) < 1e-9);
            }

        // node-permutation equivariance, exact
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
                    double lhs = ap_perm.at({bi, perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]});
                    CHECK(lhs == ap.at({bi, i, j}));
                }

        // per-sample purity: editing one sample leaves the others bitwise unchanged
        if (b > 1) {
            Tensor edited = windows;
            for (int ti = 0; ti < t; ++ti) edited.at({0, 0, ti}) += 5.0;
            Tape tape3;
            Tensor ap_edit = progressive_adjacency(tape3, edited, adjustor).a_p.value();
            for (int bi = 1; bi < b; ++bi)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) CHECK(ap_edit.at({bi, i, j}) == ap.at({bi, i, j}));
        }
    }
}

TEST_CASE("gradients flow into the adjustor") {
    std::mt19937_64 rng(29);
    Tensor windows = random_tensor(rng, {2, 3, 4}, 0.0, 10.0);
    AdjustorMatrix adjustor;
    adjustor.w = Parameter("adjustor", random_tensor(rng, {4, 4}));
    Tensor contraction = random_tensor(rng, {2, 3, 3});
    Parameter* params[] = {&adjustor.w};
    auto loss_fn = [&]() {
        adjustor.w.zero_grad();
        Tape tape;
        ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor);
        Var loss = tape.sum(tape.mul_const(pa.a_p, contraction));
        tape.backward(loss);
        return loss.value()[0];
    };
    CHECK(grad_check(loss_fn, params, 1e-5) < 1e-4);
}

TEST_CASE("self-adaptive adjacency: zero embeddings give the uniform matrix") {
    SelfAdaptiveEmbeddings emb;
    emb.e1 = Parameter("e1", Tensor({3, 2}));
    emb.e2 = Parameter("e2", Tensor({3, 2}));
    Tape tape;
    Tensor a = self_adaptive_adjacency(tape, emb).value();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(a.at({i, j}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("self-adaptive adjacency hand oracle (d=1)") {
    SelfAdaptiveEmbeddings emb;
    emb.e1 = Parameter("e1", Tensor({2, 1}, {1, 2}));
    emb.e2 = Parameter("e2", Tensor({2, 1}, {1, 0}));
    Tape tape;
    Tensor a = self_adaptive_adjacency(tape, emb).value();
    CHECK(a.at({0, 0}) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(a.at({0, 1}) == doctest::Approx(0.2689).epsilon(1e-4));
    CHECK(a.at({1, 0}) == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(a.at({1, 1}) == doctest::Approx(0.1192).epsilon(1e-4));
}

TEST_CASE("self-adaptive rows sum to one for random embeddings") {
    std::mt19937_64 rng(31);
    SelfAdaptiveEmbeddings emb;
    emb.e1 = Parameter("e1", random_tensor(rng, {5, 3}));
    emb.e2 = Parameter("e2", random_tensor(rng, {5, 3}));
    Tape tape;
    Tensor a = self_adaptive_adjacency(tape, emb).value();
    for (int i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 5; ++j) sum += a.at({i, j});
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
    // gradients reach both embeddings
    Parameter* params[] = {&emb.e1, &emb.e2};
    Tensor contraction = random_tensor(rng, {5, 5});
    auto loss_fn = [&]() {
        emb.e1.zero_grad();
        emb.e2.zero_grad();
        Tape t;
        Var loss = t.sum(t.mul_const(self_adaptive_adjacency(t, emb), contraction));
        t.backward(loss);
        return loss.value()[0];
    };
    CHECK(grad_check(loss_fn, params, 1e-5) < 1e-4);
}

TEST_CASE("edge-list CSV round trip with first-seen node order") {
    const std::string path = "test_edges_tmp.csv";
    {
        std::ofstream out(path);
        out << "from,to,weight\n";
        out << "sensorB,sensorA,2.0\n";
        out << "sensorA,sensorC\n";  // weight defaults to 1.0
        out << "sensorC,sensorB,0.5\n";
    }
    RoadGraph g = RoadGraph::load_edge_csv(path);
    CHECK(g.num_nodes == 3);
    CHECK(g.node_names[0] == "sensorB");
    CHECK(g.node_names[1] == "sensorA");
    CHECK(g.node_names[2] == "sensorC");
    CHECK(g.adjacency.at({0, 1}) == 2.0);
    CHECK(g.adjacency.at({1, 2}) == 1.0);
    CHECK(g.adjacency.at({2, 0}) == 0.5);

    const std::string index_path = "test_node_index_tmp.csv";
    g.write_node_index_csv(index_path);
    std::ifstream in(index_path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,name");
    std::getline(in, line);
    CHECK(line == "0,sensorB");

    RoadGraph aligned = g.aligned_to({"sensorA", "sensorB", "sensorC"});
    CHECK(aligned.adjacency.at({1, 0}) == 2.0);
    CHECK_THROWS_AS(g.aligned_to({"sensorA", "sensorB"}), DataError);

    std::remove(path.c_str());
    std::remove(index_path.c_str());
}

TEST_CASE("edge CSV parse errors carry line numbers") {
    const std::string path = "test_edges_bad_tmp.csv";
    {
        std::ofstream out(path);
        out << "from,to,weight\n";
        out << "a,b,notanumber\n";
    }
    CHECK_THROWS_WITH_AS(RoadGraph::load_edge_csv(path), doctest::Contains(":2:"), ParseError);
    std::remove(path.c_str());
}
