#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pgcn/tape.hpp"
#include "pgcn/tensor.hpp"

namespace pgcn {

// Physical road network: nonnegative weighted adjacency over dense node ids
// 0..N-1. External sensor names are kept in first-seen order.
struct RoadGraph {
    int num_nodes = 0;
    std::vector<std::string> node_names;
    Tensor adjacency;  // [N,N], A[i][j] > 0 iff edge (v_i, v_j)
    bool directed = true;

    static RoadGraph from_edges(int num_nodes,
                                const std::vector<std::tuple<int, int, double>>& edges);
    // Edge-list CSV with header `from,to,weight` (weight optional, default
    // 1.0); ids are external names mapped to dense indices in first-seen
    // order.
    static RoadGraph load_edge_csv(const std::string& path);

    void write_node_index_csv(const std::string& path) const;

    // Re-index onto an externally fixed node-name order (signal columns).
    // Names missing from the graph become isolated nodes; graph names
    // absent from `names` raise DataError.
    RoadGraph aligned_to(const std::vector<std::string>& names) const;
};

// Forward/backward transition matrices P = A / rowsum(A), P_t from A^T.
// Zero-out-degree rows stay all-zero. For symmetric A (within 1e-12) the
// undirected flag is set and P_t is an exact copy of P.
struct TransitionPair {
    Tensor forward;   // [N,N] row-stochastic where out-degree > 0
    Tensor backward;  // built from A^T
    bool undirected = false;

    int num_nodes() const { return forward.rank() == 2 ? forward.dim(0) : 0; }
};

TransitionPair transition_matrix(const RoadGraph& graph);

// Learnable T x T bilinear form between normalized node windows; a single
// instance is shared by every layer of the network.
struct AdjustorMatrix {
    Parameter w;  // [T,T]

    int window() const { return w.value.rank() == 2 ? w.value.dim(0) : 0; }
};

// Learned node embeddings for the self-adaptive adjacency.
struct SelfAdaptiveEmbeddings {
    Parameter e1;  // [N,d]
    Parameter e2;  // [N,d]
};

// Per-sample progressive adjacency: row-stochastic [B,N,N] built from the
// sample's input windows and the shared adjustor.
struct ProgressiveAdjacency {
    Var a_p;                       // [B,N,N], on the tape
    std::optional<Tensor> scores;  // raw pre-activation similarity cache
};

// Min-max then l2 normalization of one node window. Constant windows
// (max == min) map to the zero vector, which scores zero against every
// other node and softmaxes to a uniform row.
std::vector<double> normalize_window(const std::vector<double>& x);
void normalize_window_inplace(double* x, int n);

// A_p = row_softmax(relu(Xn W Xn^T)) per sample, where Xn holds the
// normalized node windows. Gradients flow into the adjustor only; the
// windows are data. Softmax runs row-wise over target nodes, so each
// node's outgoing weights sum to 1.
ProgressiveAdjacency progressive_adjacency(Tape& tape, const Tensor& windows /*[B,N,T]*/, AdjustorMatrix& adjustor,
                                           bool keep_scores = false);

// row_softmax(relu(E1 E2^T)): row-stochastic, strictly positive, frozen
// after training (no dependence on the input window).
Var self_adaptive_adjacency(Tape& tape, SelfAdaptiveEmbeddings& emb);

}  // namespace pgcn
