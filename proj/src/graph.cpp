#include "pgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "pgcn/errors.hpp"

namespace pgcn {

RoadGraph RoadGraph::from_edges(int num_nodes, const std::vector<std::tuple<int, int, double>>& edges) {
    RoadGraph g;
    g.num_nodes = num_nodes;
    g.node_names.reserve(static_cast<std::size_t>(num_nodes));
    for (int i = 0; i < num_nodes; ++i) g.node_names.push_back(std::to_string(i));
    g.adjacency = Tensor({num_nodes, num_nodes});
    for (const auto& [from, to, w] : edges) {
        if (from < 0 || from >= num_nodes || to < 0 || to >= num_nodes) {
            throw DataError("edge (" + std::to_string(from) + "," + std::to_string(to) + ") out of node range");
        }
        g.adjacency.at({from, to}) += w;
    }
    bool symmetric = true;
    for (int i = 0; i < num_nodes && symmetric; ++i)
        for (int j = 0; j < num_nodes; ++j)
            if (std::fabs(g.adjacency.at({i, j}) - g.adjacency.at({j, i})) > 1e-12) {
                symmetric = false;
                break;
            }
    g.directed = !symmetric;
    return g;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

RoadGraph RoadGraph::load_edge_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty edge file");
    auto header = split_csv_line(strip(line));
    if (header.size() < 2 || strip(header[0]) != "from" || strip(header[1]) != "to") {
        throw ParseError(path + ":1: expected header `from,to[,weight]`");
    }
    const bool has_weight = header.size() >= 3 && strip(header[2]) == "weight";

    std::unordered_map<std::string, int> index;
    std::vector<std::string> names;
    std::vector<std::tuple<int, int, double>> edges;
    auto intern = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(names.size());
        index.emplace(name, id);
        names.push_back(name);
        return id;
    };

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty()) continue;
        auto fields = split_csv_line(s);
        if (fields.size() < 2 || (has_weight && fields.size() > 3) || (!has_weight && fields.size() > 2)) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             (has_weight ? "2-3" : "2") + " fields, got " + std::to_string(fields.size()));
        }
        double w = 1.0;
        if (has_weight && fields.size() == 3 && !strip(fields[2]).empty()) {
            try {
                w = std::stod(strip(fields[2]));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad weight `" + fields[2] + "`");
            }
        }
        const int from = intern(strip(fields[0]));  // interned in field order
        const int to = intern(strip(fields[1]));
        edges.emplace_back(from, to, w);
    }
    RoadGraph g = from_edges(static_cast<int>(names.size()), edges);
    g.node_names = std::move(names);
    return g;
}

void RoadGraph::write_node_index_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "index,name\n";
    for (int i = 0; i < num_nodes; ++i) out << i << "," << node_names[static_cast<std::size_t>(i)] << "\n";
}

RoadGraph RoadGraph::aligned_to(const std::vector<std::string>& names) const {
    std::unordered_map<std::string, int> target;
    for (std::size_t i = 0; i < names.size(); ++i) target.emplace(names[i], static_cast<int>(i));
    std::vector<int> remap(static_cast<std::size_t>(num_nodes), -1);
    for (int i = 0; i < num_nodes; ++i) {
        auto it = target.find(node_names[static_cast<std::size_t>(i)]);
        if (it == target.end()) {
            throw DataError("graph node `" + node_names[static_cast<std::size_t>(i)] +
                            "` does not appear in the signal data");
        }
        remap[static_cast<std::size_t>(i)] = it->second;
    }
    RoadGraph out;
    out.num_nodes = static_cast<int>(names.size());
    out.node_names = names;
    out.adjacency = Tensor({out.num_nodes, out.num_nodes});
    for (int i = 0; i < num_nodes; ++i)
        for (int j = 0; j < num_nodes; ++j) {
            double w = adjacency.at({i, j});
            if (w != 0.0) out.adjacency.at({remap[static_cast<std::size_t>(i)], remap[static_cast<std::size_t>(j)]}) = w;
        }
    out.directed = directed;
    return out;
}

TransitionPair transition_matrix(const RoadGraph& graph) {
    const Tensor& a = graph.adjacency;
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
        throw DimensionError("transition_matrix: adjacency must be square, got " + shape_str(a.shape()));
    }
    const int n = a.dim(0);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (a[i] < 0.0) throw DomainError("transition_matrix: negative adjacency entry");
    }
    auto row_normalize = [n](auto&& get) {
        Tensor p({n, n});
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += get(i, j);
            if (s > 0.0)
                for (int j = 0; j < n; ++j) p.at({i, j}) = get(i, j) / s;
            // zero out-degree: row stays all-zero (isolated node, no NaN)
        }
        return p;
    };

    TransitionPair tp;
    tp.forward = row_normalize([&](int i, int j) { return a.at({i, j}); });
    bool symmetric = true;
    for (int i = 0; i < n && symmetric; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(a.at({i, j}) - a.at({j, i})) > 1e-12) {
                symmetric = false;
                break;
            }
    tp.undirected = symmetric;
    if (symmetric) {
        tp.backward = tp.forward;  // exact copy, not a recomputation
    } else {
        tp.backward = row_normalize([&](int i, int j) { return a.at({j, i}); });
    }
    return tp;
}

std::vector<double> normalize_window(const std::vector<double>& x) {
    std::vector<double> out = x;
    normalize_window_inplace(out.data(), static_cast<int>(out.size()));
    return out;
}

void normalize_window_inplace(double* x, int n) {
    if (n <= 0) return;
    double lo = x[0], hi = x[0];
    for (int i = 1; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    if (hi <= lo) {
        for (int i = 0; i < n; ++i) x[i] = 0.0;
        return;
    }
    const double span = hi - lo;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = (x[i] - lo) / span;
        sq += x[i] * x[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > 0.0) {
        for (int i = 0; i < n; ++i) x[i] /= norm;
    } else {
        for (int i = 0; i < n; ++i) x[i] = 0.0;
    }
}

ProgressiveAdjacency progressive_adjacency(Tape& tape, const Tensor& windows, AdjustorMatrix& adjustor,
                                           bool keep_scores) {
    if (windows.rank() != 3) {
        throw DimensionError("progressive_adjacency: windows must be [B,N,T], got " + shape_str(windows.shape()));
    }
    const int b = windows.dim(0), n = windows.dim(1), t = windows.dim(2);
    if (adjustor.window() != t) {
        throw DimensionError("progressive_adjacency: window length " + std::to_string(t) +
                             " does not match adjustor " + shape_str(adjustor.w.value.shape()));
    }
    Tensor normalized = windows;
    for (int bi = 0; bi < b; ++bi)
        for (int ni = 0; ni < n; ++ni)
            normalize_window_inplace(normalized.data() + (static_cast<std::size_t>(bi) * n + ni) * t, t);

    Var xn = tape.constant(std::move(normalized));
    Var w = tape.param(adjustor.w);
    Var scores = tape.bmm(tape.bmm(xn, w), xn, /*transpose_b=*/true);  // [B,N,N]
    ProgressiveAdjacency out;
    if (keep_scores) out.scores = scores.value();
    out.a_p = tape.row_softmax(tape.relu(scores));
    return out;
}

Var self_adaptive_adjacency(Tape& tape, SelfAdaptiveEmbeddings& emb) {
    const Tensor& e1 = emb.e1.value;
    const Tensor& e2 = emb.e2.value;
    if (e1.rank() != 2 || e2.rank() != 2 || e1.dim(0) != e2.dim(0) || e1.dim(1) != e2.dim(1)) {
        throw DimensionError("self_adaptive_adjacency: embeddings " + shape_str(e1.shape()) + " and " +
                             shape_str(e2.shape()) + " must both be [N,d]");
    }
    return tape.row_softmax(tape.relu(tape.matmul_nt(tape.param(emb.e1), tape.param(emb.e2))));
}

}  // namespace pgcn
