#include "pgcn/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "pgcn/errors.hpp"

namespace pgcn {

std::string AdjacencyCombo::str() const {
    std::string s;
    auto append = [&s](const char* tok) {
        if (!s.empty()) s += "+";
        s += tok;
    };
    if (transition) append("T");
    if (progressive) append("P");
    if (self_adaptive) append("SA");
    return s;
}

AdjacencyCombo AdjacencyCombo::parse(const std::string& s) {
    AdjacencyCombo combo{false, false, false};
    std::string token;
    auto flush = [&]() {
        if (token.empty()) return;
        std::string up;
        for (char c : token) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up == "T")
            combo.transition = true;
        else if (up == "SA")
            combo.self_adaptive = true;
        else if (up == "P")
            combo.progressive = true;
        else
            throw ConfigError("unknown adjacency term `" + token + "` (expected T, SA or P)");
        token.clear();
    };
    for (char c : s) {
        if (c == '+' || c == ',' || c == ' ' || c == '\t')
            flush();
        else
            token += c;
    }
    flush();
    if (combo.empty()) throw ConfigError("adjacency combo `" + s + "` names no terms");
    return combo;
}

void PGCNConfig::validate() const {
    if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
    if (static_cast<int>(dilations.size()) != num_layers) {
        throw ConfigError("dilations has " + std::to_string(dilations.size()) + " entries for num_layers=" +
                          std::to_string(num_layers));
    }
    for (int d : dilations)
        if (d < 1) throw ConfigError("dilation factors must be >= 1");
    if (kernel_size < 1) throw ConfigError("kernel_size must be >= 1");
    if (diffusion_steps < 1) throw ConfigError("diffusion_steps must be >= 1");
    if (input_window < 1 || output_window < 1) throw ConfigError("input/output windows must be >= 1");
    if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
    if (hidden_dim < 1 || skip_dim < 1 || end_dim < 1) throw ConfigError("hidden/skip/end dims must be >= 1");
    if (combo.empty()) throw ConfigError("adjacency combo must name at least one of T, SA, P");
    if (combo.self_adaptive && sa_embedding_dim < 1) throw ConfigError("sa_embedding_dim must be >= 1");
}

int receptive_field(const PGCNConfig& config) {
    config.validate();
    int total = 0;
    for (int d : config.dilations) total += d;
    return 1 + (config.kernel_size - 1) * total;
}

namespace {

Tensor uniform_tensor(std::mt19937_64& rng, Shape shape, double bound) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

Tensor normal_tensor(std::mt19937_64& rng, Shape shape, double stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

}  // namespace

PGCNModel::PGCNModel(PGCNConfig config, int num_nodes, bool graph_undirected, std::uint64_t seed)
    : config_(std::move(config)), num_nodes_(num_nodes), undirected_(graph_undirected), seed_(seed) {
    config_.validate();
    if (num_nodes_ < 1) throw ConfigError("model needs at least one node");

    std::mt19937_64 rng(seed_);
    const int d = config_.hidden_dim;
    const int pk = config_.kernel_size;

    input_w_ = Parameter("input_proj.weight",
                         uniform_tensor(rng, {config_.input_channels, d}, 1.0 / std::sqrt(config_.input_channels)));
    input_b_ = Parameter("input_proj.bias", Tensor({d}));

    std::vector<std::string> term_ids;
    if (config_.combo.transition) {
        term_ids.push_back("t_fwd");
        if (!undirected_) term_ids.push_back("t_bwd");
    }
    if (config_.combo.progressive) term_ids.push_back("p");
    if (config_.combo.self_adaptive) term_ids.push_back("sa");

    const double kernel_bound = 1.0 / std::sqrt(static_cast<double>(pk) * d);
    const double map_bound = 1.0 / std::sqrt(static_cast<double>(d));
    layers_.reserve(static_cast<std::size_t>(config_.num_layers));
    for (int li = 0; li < config_.num_layers; ++li) {
        const std::string prefix = "layer" + std::to_string(li) + ".";
        LayerWeights lw;
        lw.filter_kernel = Parameter(prefix + "filter_kernel", uniform_tensor(rng, {pk, d, d}, kernel_bound));
        lw.gate_kernel = Parameter(prefix + "gate_kernel", uniform_tensor(rng, {pk, d, d}, kernel_bound));
        for (const std::string& id : term_ids) {
            LayerWeights::DiffusionTerm term;
            term.id = id;
            for (int k = 0; k < config_.diffusion_steps; ++k) {
                term.w.emplace_back(prefix + "diffusion." + id + ".k" + std::to_string(k),
                                    uniform_tensor(rng, {d, d}, map_bound));
            }
            lw.terms.push_back(std::move(term));
        }
        lw.residual_w = Parameter(prefix + "residual.weight", uniform_tensor(rng, {d, d}, map_bound));
        lw.residual_b = Parameter(prefix + "residual.bias", Tensor({d}));
        lw.skip_w = Parameter(prefix + "skip.weight", uniform_tensor(rng, {d, config_.skip_dim}, map_bound));
        lw.skip_b = Parameter(prefix + "skip.bias", Tensor({config_.skip_dim}));
        layers_.push_back(std::move(lw));
    }

    head1_w_ = Parameter("head.fc1.weight",
                         uniform_tensor(rng, {config_.skip_dim, config_.end_dim}, 1.0 / std::sqrt(config_.skip_dim)));
    head1_b_ = Parameter("head.fc1.bias", Tensor({config_.end_dim}));
    head2_w_ = Parameter("head.fc2.weight",
                         uniform_tensor(rng, {config_.end_dim, config_.output_window},
                                        1.0 / std::sqrt(config_.end_dim)));
    head2_b_ = Parameter("head.fc2.bias", Tensor({config_.output_window}));

    if (config_.combo.progressive) {
        const int t = config_.input_window;
        Tensor w = Tensor::identity(t);
        Tensor noise = uniform_tensor(rng, {t, t}, 0.01);
        for (std::size_t i = 0; i < w.numel(); ++i) w[i] += noise[i];
        adjustor_.w = Parameter("adjustor", std::move(w));
    }
    if (config_.combo.self_adaptive) {
        SelfAdaptiveEmbeddings emb;
        emb.e1 = Parameter("sa.e1", normal_tensor(rng, {num_nodes_, config_.sa_embedding_dim}, 1.0));
        emb.e2 = Parameter("sa.e2", normal_tensor(rng, {num_nodes_, config_.sa_embedding_dim}, 1.0));
        sa_ = std::move(emb);
    }
}

Var gated_temporal_unit(Tape& tape, Var x, Parameter& filter_kernel, Parameter& gate_kernel, int dilation) {
    Var c1 = tape.dilated_causal_conv(x, tape.param(filter_kernel), dilation);
    Var c2 = tape.dilated_causal_conv(x, tape.param(gate_kernel), dilation);
    return tape.hadamard(tape.tanh(c1), tape.sigmoid(c2));
}

Var PGCNModel::graph_convolution(Tape& tape, Var z, int layer_index, const LayerGraphs& graphs) {
    LayerWeights& lw = layers_.at(static_cast<std::size_t>(layer_index));
    if (lw.terms.empty()) throw ConfigError("graph_convolution: no active adjacency terms");
    Var acc{};
    for (LayerWeights::DiffusionTerm& term : lw.terms) {
        Var adj{};
        if (term.id == "t_fwd") {
            if (!graphs.trans_fwd) throw ConfigError("graph_convolution: transition matrix missing");
            adj = *graphs.trans_fwd;
        } else if (term.id == "t_bwd") {
            if (!graphs.trans_bwd) throw ConfigError("graph_convolution: backward transition missing");
            adj = *graphs.trans_bwd;
        } else if (term.id == "p") {
            if (!graphs.progressive) throw ConfigError("graph_convolution: progressive adjacency missing");
            adj = *graphs.progressive;
        } else {
            if (!graphs.self_adaptive) throw ConfigError("graph_convolution: self-adaptive adjacency missing");
            adj = *graphs.self_adaptive;
        }
        const bool single_hop = term.id == "p" && config_.progressive_single_hop;
        Var single_hop_mixed{};
        if (single_hop) single_hop_mixed = tape.node_mix(adj, z);
        Var cur = z;
        for (int k = 0; k < config_.diffusion_steps; ++k) {
            Var mixed;
            if (single_hop) {
                mixed = single_hop_mixed;
            } else if (k == 0) {
                mixed = z;  // zeroth power: identity mixing
            } else {
                cur = tape.node_mix(adj, cur);
                mixed = cur;
            }
            Var mapped = tape.channel_map(mixed, tape.param(term.w[static_cast<std::size_t>(k)]));
            acc = acc.valid() ? tape.add(acc, mapped) : mapped;
        }
    }
    return acc;
}

Var PGCNModel::st_layer_forward(Tape& tape, Var x_in, int layer_index, const LayerGraphs& graphs, Var* skip_out) {
    LayerWeights& lw = layers_.at(static_cast<std::size_t>(layer_index));
    const int dilation = config_.dilations[static_cast<std::size_t>(layer_index)];
    Var gated = gated_temporal_unit(tape, x_in, lw.filter_kernel, lw.gate_kernel, dilation);
    Var gc = graph_convolution(tape, gated, layer_index, graphs);
    const int t_out = gc.shape()[2];
    // residual aligned to the most recent timesteps
    Var res = tape.add_bias(tape.channel_map(tape.crop_time(x_in, t_out), tape.param(lw.residual_w)),
                            tape.param(lw.residual_b));
    Var out = tape.add(gc, res);
    if (skip_out) {
        *skip_out = tape.add_bias(tape.channel_map(tape.crop_time(gated, 1), tape.param(lw.skip_w)),
                                  tape.param(lw.skip_b));
    }
    return out;
}

Var PGCNModel::forward(Tape& tape, const Tensor& x, const TransitionPair* trans, ForwardTrace* trace) {
    if (x.rank() != 4) throw DimensionError("forward: input must be [B,T,N,C], got " + shape_str(x.shape()));
    const int b = x.dim(0), t = x.dim(1), n = x.dim(2), c = x.dim(3);
    if (t != config_.input_window) {
        throw DimensionError("forward: input window " + std::to_string(t) + " does not match configured " +
                             std::to_string(config_.input_window));
    }
    if (n != num_nodes_) {
        throw DimensionError("forward: " + std::to_string(n) + " nodes in input, model built for " +
                             std::to_string(num_nodes_));
    }
    if (c != config_.input_channels) {
        throw DimensionError("forward: " + std::to_string(c) + " channels in input, configured " +
                             std::to_string(config_.input_channels));
    }
    if (config_.combo.transition) {
        if (trans == nullptr) throw ConfigError("forward: combo includes T but no transition matrices given");
        if (trans->num_nodes() != n) {
            throw DimensionError("forward: transition matrices " + shape_str(trans->forward.shape()) +
                                 " do not match " + std::to_string(n) + " nodes");
        }
    }

    LayerGraphs graphs;
    if (config_.combo.progressive) {
        // primary-channel windows, node-major: [B,N,T]
        Tensor windows({b, n, t});
        for (int bi = 0; bi < b; ++bi)
            for (int ti = 0; ti < t; ++ti)
                for (int ni = 0; ni < n; ++ni)
                    windows[(static_cast<std::size_t>(bi) * n + ni) * t + ti] =
                        x[((static_cast<std::size_t>(bi) * t + ti) * n + ni) * c];
        ProgressiveAdjacency pa = progressive_adjacency(tape, windows, adjustor_);
        graphs.progressive = pa.a_p;
        if (trace) trace->a_p = pa.a_p.value();
    }
    if (config_.combo.self_adaptive) {
        graphs.self_adaptive = self_adaptive_adjacency(tape, *sa_);
        if (trace) trace->a_sa = graphs.self_adaptive->value();
    }
    if (config_.combo.transition) {
        graphs.trans_fwd = tape.constant(trans->forward);
        if (!undirected_) graphs.trans_bwd = tape.constant(trans->backward);
    }

    Tensor x_node_major = swap_axes12(x);  // [B,N,T,C]
    const int field = receptive_field(config_);
    if (t < field) x_node_major = pad_time_front(x_node_major, field - t);

    Var h = tape.constant(std::move(x_node_major));
    h = tape.add_bias(tape.channel_map(h, tape.param(input_w_)), tape.param(input_b_));

    Var skip{};
    for (int li = 0; li < config_.num_layers; ++li) {
        Var layer_skip{};
        h = st_layer_forward(tape, h, li, graphs, &layer_skip);
        skip = skip.valid() ? tape.add(skip, layer_skip) : layer_skip;
        if (trace) {
            trace->layer_outputs.push_back(h.value());
            trace->skip_contributions.push_back(layer_skip.value());
        }
    }
    if (trace) trace->skip_sum = skip.value();

    Var out = tape.relu(skip);
    out = tape.add_bias(tape.channel_map(out, tape.param(head1_w_)), tape.param(head1_b_));
    out = tape.relu(out);
    out = tape.add_bias(tape.channel_map(out, tape.param(head2_w_)), tape.param(head2_b_));
    // [B,N,1,T'] -> [B,N,T']
    return tape.reshape(out, {b, n, config_.output_window});
}

Tensor PGCNModel::predict(const Tensor& x, const TransitionPair* trans) {
    Tape tape;
    Var out = forward(tape, x, trans);
    return swap_axes12(out.value());  // [B,T',N]
}

std::vector<Parameter*> PGCNModel::parameters() {
    std::vector<Parameter*> out;
    out.push_back(&input_w_);
    out.push_back(&input_b_);
    for (LayerWeights& lw : layers_) {
        out.push_back(&lw.filter_kernel);
        out.push_back(&lw.gate_kernel);
        for (auto& term : lw.terms)
            for (Parameter& p : term.w) out.push_back(&p);
        out.push_back(&lw.residual_w);
        out.push_back(&lw.residual_b);
        out.push_back(&lw.skip_w);
        out.push_back(&lw.skip_b);
    }
    out.push_back(&head1_w_);
    out.push_back(&head1_b_);
    out.push_back(&head2_w_);
    out.push_back(&head2_b_);
    if (config_.combo.progressive) out.push_back(&adjustor_.w);
    if (sa_) {
        out.push_back(&sa_->e1);
        out.push_back(&sa_->e2);
    }
    return out;
}

std::size_t PGCNModel::parameter_count() const {
    auto* self = const_cast<PGCNModel*>(this);
    std::size_t total = 0;
    for (const Parameter* p : self->parameters()) total += p->numel();
    return total;
}

void PGCNModel::zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace pgcn
