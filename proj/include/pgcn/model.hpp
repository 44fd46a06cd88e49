#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pgcn/graph.hpp"
#include "pgcn/tape.hpp"
#include "pgcn/tensor.hpp"

namespace pgcn {

// Which adjacency structures the graph convolution aggregates over:
// T = physical transition matrices, P = progressive (input-adaptive),
// SA = self-adaptive learned embeddings.
struct AdjacencyCombo {
    bool transition = true;
    bool self_adaptive = false;
    bool progressive = true;

    bool empty() const { return !(transition || self_adaptive || progressive); }
    std::string str() const;  // canonical "T+P" form
    static AdjacencyCombo parse(const std::string& s);
    bool operator==(const AdjacencyCombo&) const = default;
};

struct PGCNConfig {
    int num_layers = 8;
    int hidden_dim = 32;  // D
    std::vector<int> dilations = {1, 2, 1, 2, 1, 2, 1, 2};
    // Temporal kernel length (P_k). Called kernel_size here because P
    // already names the transition matrix.
    int kernel_size = 2;
    int diffusion_steps = 2;  // K
    int input_window = 12;    // T
    int output_window = 12;   // T'
    int input_channels = 1;   // C
    int skip_dim = 256;
    int end_dim = 512;
    AdjacencyCombo combo{};
    // Apply the progressive adjacency once per diffusion step instead of
    // raising it to the k-th power.
    bool progressive_single_hop = false;
    int sa_embedding_dim = 10;

    void validate() const;
};

// Past steps that can influence one output position of the temporal stack:
// 1 + (kernel_size - 1) * sum(dilations).
int receptive_field(const PGCNConfig& config);

// All learnable state of one spatial-temporal layer.
struct LayerWeights {
    Parameter filter_kernel;  // [P_k, D, D] temporal kernel, tanh branch
    Parameter gate_kernel;  // [P_k, D, D] temporal kernel, gate branch

    // One stack of K mixing weights [D,D] per active adjacency term, in
    // order: transition-forward, transition-backward (directed graphs
    // only), progressive, self-adaptive.
    struct DiffusionTerm {
        std::string id;  // "t_fwd", "t_bwd", "p", "sa"
        std::vector<Parameter> w;
    };
    std::vector<DiffusionTerm> terms;

    Parameter residual_w, residual_b;  // [D,D], [D]
    Parameter skip_w, skip_b;          // [D,skip_dim], [skip_dim]
};

// Adjacency variables lifted onto a tape for one forward pass.
struct LayerGraphs {
    std::optional<Var> trans_fwd;
    std::optional<Var> trans_bwd;
    std::optional<Var> progressive;    // [B,N,N]
    std::optional<Var> self_adaptive;  // [N,N]
};

// Optional capture of intermediate values for tests and inspection.
struct ForwardTrace {
    std::vector<Tensor> gate_outputs;
    std::vector<Tensor> layer_outputs;
    std::vector<Tensor> skip_contributions;
    Tensor skip_sum;
    Tensor a_p;   // [B,N,N] when the progressive term is active
    Tensor a_sa;  // [N,N] when the self-adaptive term is active
};

// H = tanh(conv(x; filter_kernel, d)) * sigmoid(conv(x; gate_kernel, d)), applied per
// node; output keeps T - d*(P_k-1) steps.
Var gated_temporal_unit(Tape& tape, Var x, Parameter& filter_kernel, Parameter& gate_kernel, int dilation);

class PGCNModel {
public:
    PGCNModel(PGCNConfig config, int num_nodes, bool graph_undirected, std::uint64_t seed);

    // x: [B,T,N,C] in scaler space. Returns the prediction [B,N,T'] as a
    // tape variable; A_p is computed once per sample from the primary
    // input channel and reused by every layer, and the input is left
    // zero-padded along time up to the receptive field.
    Var forward(Tape& tape, const Tensor& x, const TransitionPair* trans, ForwardTrace* trace = nullptr);

    // Convenience inference wrapper returning [B,T',N].
    Tensor predict(const Tensor& x, const TransitionPair* trans);

    // Sum over active diffusion terms and steps k of mix^k(z) W_k, where
    // the mixing matrix is P, P^T, A_p or A_sa; k = 0 applies no mixing.
    Var graph_convolution(Tape& tape, Var z, int layer_index, const LayerGraphs& graphs);

    // One spatial-temporal layer: gated temporal unit, graph convolution,
    // residual re-map of the (time-cropped) input, and a skip contribution
    // taken at the window-end position.
    Var st_layer_forward(Tape& tape, Var x_in, int layer_index, const LayerGraphs& graphs, Var* skip_out);

    std::vector<Parameter*> parameters();  // fixed order, used by checkpoints
    std::size_t parameter_count() const;
    void zero_grad();

    const PGCNConfig& config() const { return config_; }
    int num_nodes() const { return num_nodes_; }
    bool graph_undirected() const { return undirected_; }
    std::uint64_t seed() const { return seed_; }

    AdjustorMatrix& adjustor() { return adjustor_; }
    SelfAdaptiveEmbeddings* self_adaptive() { return sa_ ? &*sa_ : nullptr; }
    LayerWeights& layer(int i) { return layers_.at(static_cast<std::size_t>(i)); }

private:
    PGCNConfig config_;
    int num_nodes_ = 0;
    bool undirected_ = false;
    std::uint64_t seed_ = 0;

    Parameter input_w_, input_b_;
    std::vector<LayerWeights> layers_;
    Parameter head1_w_, head1_b_;  // skip_dim -> end_dim
    Parameter head2_w_, head2_b_;  // end_dim -> T'
    AdjustorMatrix adjustor_;      // allocated when the progressive term is active
    std::optional<SelfAdaptiveEmbeddings> sa_;
};

}  // namespace pgcn
