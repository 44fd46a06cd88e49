#include "pgcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>

#include "pgcn/errors.hpp"

namespace pgcn {

Var Tape::make(Tensor value, bool needs_grad, std::function<void(Tape&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::check_mine(Var v, const char* op) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw Error(std::string(op) + ": variable does not belong to this tape");
    }
    return v;
}

Var Tape::constant(Tensor v) { return make(std::move(v), false, nullptr); }

Var Tape::param(Parameter& p) {
    Var v = make(p.value, true, nullptr);
    node(v.id).bound = &p;
    return v;
}

// ---------------------------------------------------------------- matmul

Var Tape::bmm_impl(Var av, Var bv, bool transpose_b, const Shape* out_shape_override, const char* opname) {
    check_mine(av, opname);
    check_mine(bv, opname);
    const Tensor& a = node(av.id).value;
    const Tensor& b = node(bv.id).value;
    if (a.rank() < 2 || a.rank() > 3 || b.rank() < 2 || b.rank() > 3) {
        throw DimensionError(std::string(opname) + ": operands must be rank 2 or 3, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    const bool a3 = a.rank() == 3, b3 = b.rank() == 3;
    const int batch = a3 ? a.dim(0) : (b3 ? b.dim(0) : 1);
    if (a3 && b3 && a.dim(0) != b.dim(0)) {
        throw DimensionError(std::string(opname) + ": batch dims differ, " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    const int m = a.dim(-2), ka = a.dim(-1);
    const int kb = transpose_b ? b.dim(-1) : b.dim(-2);
    const int n = transpose_b ? b.dim(-2) : b.dim(-1);
    if (ka != kb) {
        throw DimensionError(std::string(opname) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " mismatch");
    }
    const int k = ka;

    Shape out_shape = out_shape_override ? *out_shape_override
                                         : ((a3 || b3) ? Shape{batch, m, n} : Shape{m, n});
    Tensor out(out_shape);
    const std::size_t a_str = a3 ? static_cast<std::size_t>(m) * k : 0;
    const std::size_t b_str = b3 ? static_cast<std::size_t>(k) * n : 0;
    const std::size_t o_str = static_cast<std::size_t>(m) * n;
    for (int i = 0; i < batch; ++i) {
        const double* ap = a.data() + a_str * i;
        const double* bp = b.data() + b_str * i;
        double* op = out.data() + o_str * i;
        if (transpose_b)
            gemm_nt_acc(m, k, n, ap, bp, op);
        else
            gemm_nn_acc(m, k, n, ap, bp, op);
    }

    bool ng = node(av.id).needs_grad || node(bv.id).needs_grad;
    int aid = av.id, bid = bv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, aid, bid, transpose_b, batch, m, n, k, a3, b3](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& an = t.node(aid);
            Node& bn = t.node(bid);
            const std::size_t a_str2 = a3 ? static_cast<std::size_t>(m) * k : 0;
            const std::size_t b_str2 = b3 ? static_cast<std::size_t>(k) * n : 0;
            const std::size_t o_str2 = static_cast<std::size_t>(m) * n;
            for (int i = 0; i < batch; ++i) {
                const double* gp = g.data() + o_str2 * i;
                if (an.needs_grad) {
                    double* dap = an.grad.data() + a_str2 * i;
                    const double* bp = bn.value.data() + b_str2 * i;
                    if (transpose_b)
                        gemm_nn_acc(m, n, k, gp, bp, dap);  // da += g * b
                    else
                        gemm_nt_acc(m, n, k, gp, bp, dap);  // da += g * b^T
                }
                if (bn.needs_grad) {
                    double* dbp = bn.grad.data() + b_str2 * i;
                    const double* ap = an.value.data() + a_str2 * i;
                    if (transpose_b)
                        gemm_tn_acc(n, m, k, gp, ap, dbp);  // db += g^T * a
                    else
                        gemm_tn_acc(k, m, n, ap, gp, dbp);  // db += a^T * g
                }
            }
        };
    }
    return outv;
}

Var Tape::matmul(Var a, Var b) {
    check_mine(a, "matmul");
    check_mine(b, "matmul");
    if (a.value().rank() != 2 || b.value().rank() != 2) {
        throw DimensionError("matmul: expects rank-2 operands, got " + shape_str(a.value().shape()) + " and " +
                             shape_str(b.value().shape()));
    }
    return bmm_impl(a, b, false, nullptr, "matmul");
}

Var Tape::matmul_nt(Var a, Var b) {
    check_mine(a, "matmul_nt");
    check_mine(b, "matmul_nt");
    if (a.value().rank() != 2 || b.value().rank() != 2) {
        throw DimensionError("matmul_nt: expects rank-2 operands, got " + shape_str(a.value().shape()) + " and " +
                             shape_str(b.value().shape()));
    }
    return bmm_impl(a, b, true, nullptr, "matmul_nt");
}

Var Tape::bmm(Var a, Var b, bool transpose_b) { return bmm_impl(a, b, transpose_b, nullptr, "bmm"); }

Var Tape::node_mix(Var adjv, Var zv) {
    check_mine(adjv, "node_mix");
    check_mine(zv, "node_mix");
    const Tensor& adj = node(adjv.id).value;
    const Tensor& z = node(zv.id).value;
    if (z.rank() != 4) throw DimensionError("node_mix: z must be [B,N,T,D], got " + shape_str(z.shape()));
    const int bsz = z.dim(0), nn = z.dim(1), tt = z.dim(2), dd = z.dim(3);
    const bool per_sample = adj.rank() == 3;
    if (per_sample) {
        if (adj.dim(0) != bsz || adj.dim(1) != nn || adj.dim(2) != nn)
            throw DimensionError("node_mix: adjacency " + shape_str(adj.shape()) + " does not match z " +
                                 shape_str(z.shape()));
    } else if (adj.rank() != 2 || adj.dim(0) != nn || adj.dim(1) != nn) {
        throw DimensionError("node_mix: adjacency " + shape_str(adj.shape()) + " does not match z " +
                             shape_str(z.shape()));
    }
    const int mcols = tt * dd;
    Tensor out({bsz, nn, tt, dd});
    const std::size_t adj_str = per_sample ? static_cast<std::size_t>(nn) * nn : 0;
    const std::size_t z_str = static_cast<std::size_t>(nn) * mcols;
    for (int b = 0; b < bsz; ++b) {
        gemm_nn_acc(nn, nn, mcols, adj.data() + adj_str * b, z.data() + z_str * b, out.data() + z_str * b);
    }
    bool ng = node(adjv.id).needs_grad || node(zv.id).needs_grad;
    int aid = adjv.id, zid = zv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, aid, zid, bsz, nn, mcols, per_sample](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& an = t.node(aid);
            Node& zn = t.node(zid);
            const std::size_t adj_str2 = per_sample ? static_cast<std::size_t>(nn) * nn : 0;
            const std::size_t z_str2 = static_cast<std::size_t>(nn) * mcols;
            for (int b = 0; b < bsz; ++b) {
                const double* gp = g.data() + z_str2 * b;
                if (an.needs_grad) {
                    // dadj += g * z^T (per sample, or summed when shared)
                    gemm_nt_acc(nn, mcols, nn, gp, zn.value.data() + z_str2 * b, an.grad.data() + adj_str2 * b);
                }
                if (zn.needs_grad) {
                    // dz += adj^T * g
                    gemm_tn_acc(nn, nn, mcols, an.value.data() + adj_str2 * b, gp, zn.grad.data() + z_str2 * b);
                }
            }
        };
    }
    return outv;
}

Var Tape::channel_map(Var xv, Var wv) {
    check_mine(xv, "channel_map");
    check_mine(wv, "channel_map");
    const Tensor& x = node(xv.id).value;
    const Tensor& w = node(wv.id).value;
    if (w.rank() != 2) throw DimensionError("channel_map: weight must be rank-2, got " + shape_str(w.shape()));
    const int c = w.dim(0), d = w.dim(1);
    if (x.rank() < 1 || x.dim(-1) != c) {
        throw DimensionError("channel_map: shapes " + shape_str(x.shape()) + " and " + shape_str(w.shape()) +
                             " mismatch");
    }
    const int rows = static_cast<int>(x.numel() / static_cast<std::size_t>(c));
    Shape out_shape = x.shape();
    out_shape.back() = d;
    Tensor out(out_shape);
    gemm_nn_acc(rows, c, d, x.data(), w.data(), out.data());
    bool ng = node(xv.id).needs_grad || node(wv.id).needs_grad;
    int xid = xv.id, wid = wv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, wid, rows, c, d](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            Node& wn = t.node(wid);
            if (xn.needs_grad) gemm_nt_acc(rows, d, c, g.data(), wn.value.data(), xn.grad.data());
            if (wn.needs_grad) gemm_tn_acc(c, rows, d, xn.value.data(), g.data(), wn.grad.data());
        };
    }
    return outv;
}

// ------------------------------------------------------------ elementwise

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                             " mismatch");
    }
}
}  // namespace

Var Tape::add(Var av, Var bv) {
    check_mine(av, "add");
    check_mine(bv, "add");
    const Tensor& a = node(av.id).value;
    const Tensor& b = node(bv.id).value;
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] + b[i];
    bool ng = node(av.id).needs_grad || node(bv.id).needs_grad;
    int aid = av.id, bid = bv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& an = t.node(aid);
            Node& bn = t.node(bid);
            if (an.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) an.grad[i] += g[i];
            if (bn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) bn.grad[i] += g[i];
        };
    }
    return outv;
}

Var Tape::sub(Var av, Var bv) {
    check_mine(av, "sub");
    check_mine(bv, "sub");
    const Tensor& a = node(av.id).value;
    const Tensor& b = node(bv.id).value;
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] - b[i];
    bool ng = node(av.id).needs_grad || node(bv.id).needs_grad;
    int aid = av.id, bid = bv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& an = t.node(aid);
            Node& bn = t.node(bid);
            if (an.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) an.grad[i] += g[i];
            if (bn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) bn.grad[i] -= g[i];
        };
    }
    return outv;
}

Var Tape::add_bias(Var xv, Var bv) {
    check_mine(xv, "add_bias");
    check_mine(bv, "add_bias");
    const Tensor& x = node(xv.id).value;
    const Tensor& b = node(bv.id).value;
    if (b.rank() != 1 || b.dim(0) != x.dim(-1)) {
        throw DimensionError("add_bias: bias " + shape_str(b.shape()) + " does not match last axis of " +
                             shape_str(x.shape()));
    }
    const int d = b.dim(0);
    const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
    Tensor out(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xp = x.data() + r * d;
        double* op = out.data() + r * d;
        for (int j = 0; j < d; ++j) op[j] = xp[j] + b[static_cast<std::size_t>(j)];
    }
    bool ng = node(xv.id).needs_grad || node(bv.id).needs_grad;
    int xid = xv.id, bid = bv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, bid, rows, d](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            Node& bn = t.node(bid);
            if (xn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i];
            if (bn.needs_grad) {
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* gp = g.data() + r * d;
                    for (int j = 0; j < d; ++j) bn.grad[static_cast<std::size_t>(j)] += gp[j];
                }
            }
        };
    }
    return outv;
}

Var Tape::hadamard(Var av, Var bv) {
    check_mine(av, "hadamard");
    check_mine(bv, "hadamard");
    const Tensor& a = node(av.id).value;
    const Tensor& b = node(bv.id).value;
    require_same_shape(a, b, "hadamard");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] * b[i];
    bool ng = node(av.id).needs_grad || node(bv.id).needs_grad;
    int aid = av.id, bid = bv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& an = t.node(aid);
            Node& bn = t.node(bid);
            if (an.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) an.grad[i] += g[i] * bn.value[i];
            if (bn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) bn.grad[i] += g[i] * an.value[i];
        };
    }
    return outv;
}

Var Tape::mul_const(Var xv, Tensor w) {
    check_mine(xv, "mul_const");
    const Tensor& x = node(xv.id).value;
    require_same_shape(x, w, "mul_const");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] * w[i];
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        auto wc = std::make_shared<Tensor>(std::move(w));
        node(self).backprop = [self, xid, wc](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            if (xn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i] * (*wc)[i];
        };
    }
    return outv;
}

Var Tape::add_const(Var xv, Tensor c) {
    check_mine(xv, "add_const");
    const Tensor& x = node(xv.id).value;
    require_same_shape(x, c, "add_const");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] + c[i];
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            if (xn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i];
        };
    }
    return outv;
}

Var Tape::scale(Var x, double a) { return affine(x, a, 0.0); }

Var Tape::affine(Var xv, double a, double b) {
    check_mine(xv, "affine");
    const Tensor& x = node(xv.id).value;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a * x[i] + b;
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, a](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            if (xn.needs_grad)
                for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += a * g[i];
        };
    }
    return outv;
}

Var Tape::relu(Var x) { return unary(x, 0); }
Var Tape::tanh(Var x) { return unary(x, 1); }
Var Tape::sigmoid(Var x) { return unary(x, 2); }
Var Tape::abs(Var x) { return unary(x, 3); }

Var Tape::unary(Var xv, int kind) {
    check_mine(xv, "unary");
    const Tensor& x = node(xv.id).value;
    Tensor out(x.shape());
    switch (kind) {
        case 0:
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        case 1:
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(x[i]);
            break;
        case 2:
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
            break;
        case 3:
            for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(x[i]);
            break;
    }
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, kind](Tape& t) {
            const Tensor& g = t.node(self).grad;
            const Tensor& y = t.node(self).value;
            Node& xn = t.node(xid);
            if (!xn.needs_grad) return;
            const Tensor& x = xn.value;
            switch (kind) {
                case 0:  // relu; subgradient 0 at 0
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        if (x[i] > 0.0) xn.grad[i] += g[i];
                    break;
                case 1:  // tanh
                    for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i] * (1.0 - y[i] * y[i]);
                    break;
                case 2:  // sigmoid
                    for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i] * y[i] * (1.0 - y[i]);
                    break;
                case 3:  // abs; subgradient 0 at 0
                    for (std::size_t i = 0; i < g.numel(); ++i) {
                        if (x[i] > 0.0)
                            xn.grad[i] += g[i];
                        else if (x[i] < 0.0)
                            xn.grad[i] -= g[i];
                    }
                    break;
            }
        };
    }
    return outv;
}

Var Tape::row_softmax(Var xv) {
    check_mine(xv, "row_softmax");
    const Tensor& x = node(xv.id).value;
    if (x.rank() < 1) throw DimensionError("row_softmax: expects rank >= 1");
    if (!x.all_finite()) throw NumericError("row_softmax: non-finite input");
    const int cols = x.dim(-1);
    const std::size_t rows = x.numel() / static_cast<std::size_t>(cols);
    Tensor out(x.shape());
    std::vector<double> exps(static_cast<std::size_t>(cols));
    std::vector<double> sorted(static_cast<std::size_t>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xp = x.data() + r * cols;
        double* op = out.data() + r * cols;
        double mx = xp[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xp[j]);
        for (int j = 0; j < cols; ++j) exps[static_cast<std::size_t>(j)] = std::exp(xp[j] - mx);
        // ascending-order accumulation: the denominator depends only on the
        // multiset of row entries, not their order
        sorted = exps;
        std::sort(sorted.begin(), sorted.end());
        double denom = 0.0;
        for (double e : sorted) denom += e;
        for (int j = 0; j < cols; ++j) op[j] = exps[static_cast<std::size_t>(j)] / denom;
    }
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, rows, cols](Tape& t) {
            const Tensor& g = t.node(self).grad;
            const Tensor& y = t.node(self).value;
            Node& xn = t.node(xid);
            if (!xn.needs_grad) return;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* gp = g.data() + r * cols;
                const double* yp = y.data() + r * cols;
                double* dp = xn.grad.data() + r * cols;
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += gp[j] * yp[j];
                for (int j = 0; j < cols; ++j) dp[j] += yp[j] * (gp[j] - dot);
            }
        };
    }
    return outv;
}

Var Tape::dilated_causal_conv(Var xv, Var kv, int dilation) {
    check_mine(xv, "dilated_causal_conv1d");
    check_mine(kv, "dilated_causal_conv1d");
    const Tensor& x = node(xv.id).value;
    const Tensor& k = node(kv.id).value;
    if (dilation < 1) throw ConfigError("dilated_causal_conv1d: dilation must be >= 1");
    if (x.rank() < 2) throw DimensionError("dilated_causal_conv1d: input must be [...,T,C], got " +
                                           shape_str(x.shape()));
    if (k.rank() != 3) throw DimensionError("dilated_causal_conv1d: kernel must be [P,C,D], got " +
                                            shape_str(k.shape()));
    const int t_in = x.dim(-2), c = x.dim(-1);
    const int p = k.dim(0), kc = k.dim(1), d_out = k.dim(2);
    if (kc != c) {
        throw DimensionError("dilated_causal_conv1d: kernel channels " + shape_str(k.shape()) +
                             " do not match input " + shape_str(x.shape()));
    }
    const int t_out = t_in - dilation * (p - 1);
    if (t_out < 1) {
        throw LengthError("dilated_causal_conv1d: window length T=" + std::to_string(t_in) +
                          " too short; requires T >= d*(P-1)+1 = " + std::to_string(dilation * (p - 1) + 1));
    }
    const std::size_t batch = x.numel() / (static_cast<std::size_t>(t_in) * c);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = t_out;
    out_shape[out_shape.size() - 1] = d_out;
    Tensor out(out_shape);
    const int shift = dilation * (p - 1);
    for (std::size_t m = 0; m < batch; ++m) {
        const double* xm = x.data() + m * t_in * c;
        double* om = out.data() + m * t_out * d_out;
        for (int t = 0; t < t_out; ++t) {
            double* orow = om + static_cast<std::size_t>(t) * d_out;
            for (int pp = 0; pp < p; ++pp) {
                const double* xrow = xm + static_cast<std::size_t>(t + shift - dilation * pp) * c;
                const double* krow = k.data() + static_cast<std::size_t>(pp) * c * d_out;
                for (int cc = 0; cc < c; ++cc) {
                    double xval = xrow[cc];
                    if (xval == 0.0) continue;
                    const double* kk = krow + static_cast<std::size_t>(cc) * d_out;
                    for (int dd = 0; dd < d_out; ++dd) orow[dd] += xval * kk[dd];
                }
            }
        }
    }
    bool ng = node(xv.id).needs_grad || node(kv.id).needs_grad;
    int xid = xv.id, kid = kv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, kid, batch, t_in, t_out, c, p, d_out, dilation, shift](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            Node& kn = t.node(kid);
            for (std::size_t m = 0; m < batch; ++m) {
                const double* gm = g.data() + m * t_out * d_out;
                const double* xm = xn.value.data() + m * t_in * c;
                double* dxm = xn.needs_grad ? xn.grad.data() + m * t_in * c : nullptr;
                for (int tt = 0; tt < t_out; ++tt) {
                    const double* grow = gm + static_cast<std::size_t>(tt) * d_out;
                    for (int pp = 0; pp < p; ++pp) {
                        const int src_t = tt + shift - dilation * pp;
                        const double* krow = kn.value.data() + static_cast<std::size_t>(pp) * c * d_out;
                        for (int cc = 0; cc < c; ++cc) {
                            double acc = 0.0;
                            const double* kk = krow + static_cast<std::size_t>(cc) * d_out;
                            for (int dd = 0; dd < d_out; ++dd) acc += kk[dd] * grow[dd];
                            if (dxm) dxm[static_cast<std::size_t>(src_t) * c + cc] += acc;
                            if (kn.needs_grad) {
                                double xval = xm[static_cast<std::size_t>(src_t) * c + cc];
                                if (xval != 0.0) {
                                    double* dk = kn.grad.data() + (static_cast<std::size_t>(pp) * c + cc) * d_out;
                                    for (int dd = 0; dd < d_out; ++dd) dk[dd] += xval * grow[dd];
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return outv;
}

Var Tape::crop_time(Var xv, int keep_last) {
    check_mine(xv, "crop_time");
    const Tensor& x = node(xv.id).value;
    if (x.rank() < 2) throw DimensionError("crop_time: expects rank >= 2, got " + shape_str(x.shape()));
    const int t_in = x.dim(-2);
    if (keep_last < 1 || keep_last > t_in) {
        throw DimensionError("crop_time: cannot keep " + std::to_string(keep_last) + " of " + std::to_string(t_in) +
                             " steps");
    }
    const int offset = t_in - keep_last;
    const int inner = x.dim(-1);
    const std::size_t outer = x.numel() / (static_cast<std::size_t>(t_in) * inner);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = keep_last;
    Tensor out(out_shape);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = x.data() + (o * t_in + offset) * inner;
        double* dst = out.data() + o * keep_last * inner;
        std::memcpy(dst, src, static_cast<std::size_t>(keep_last) * inner * sizeof(double));
    }
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid, outer, t_in, keep_last, offset, inner](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            if (!xn.needs_grad) return;
            for (std::size_t o = 0; o < outer; ++o) {
                const double* gp = g.data() + o * keep_last * inner;
                double* dp = xn.grad.data() + (o * t_in + offset) * inner;
                for (std::size_t i = 0; i < static_cast<std::size_t>(keep_last) * inner; ++i) dp[i] += gp[i];
            }
        };
    }
    return outv;
}

Var Tape::sum(Var xv) {
    check_mine(xv, "sum");
    const Tensor& x = node(xv.id).value;
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) s += x[i];
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(Tensor::scalar(s), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid](Tape& t) {
            double g = t.node(self).grad[0];
            Node& xn = t.node(xid);
            if (!xn.needs_grad) return;
            for (std::size_t i = 0; i < xn.grad.numel(); ++i) xn.grad[i] += g;
        };
    }
    return outv;
}

Var Tape::reshape(Var xv, Shape new_shape) {
    check_mine(xv, "reshape");
    const Tensor& x = node(xv.id).value;
    Tensor out = x.reshaped(std::move(new_shape));
    bool ng = node(xv.id).needs_grad;
    int xid = xv.id;
    Var outv = make(std::move(out), ng, nullptr);
    if (ng) {
        int self = outv.id;
        node(self).backprop = [self, xid](Tape& t) {
            const Tensor& g = t.node(self).grad;
            Node& xn = t.node(xid);
            if (!xn.needs_grad) return;
            for (std::size_t i = 0; i < g.numel(); ++i) xn.grad[i] += g[i];
        };
    }
    return outv;
}

void Tape::backward(Var loss) {
    check_mine(loss, "backward");
    const Node& ln = node(loss.id);
    if (ln.value.numel() != 1) {
        throw DimensionError("backward: loss must be a scalar, got shape " + shape_str(ln.value.shape()));
    }
    for (Node& n : nodes_) {
        if (n.needs_grad) n.grad = Tensor(n.value.shape());
    }
    if (!node(loss.id).needs_grad) return;  // nothing reachable is learnable
    node(loss.id).grad[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = node(i);
        if (n.needs_grad && n.backprop) n.backprop(*this);
    }
    for (Node& n : nodes_) {
        if (n.bound != nullptr && n.needs_grad) {
            for (std::size_t i = 0; i < n.grad.numel(); ++i) n.bound->grad[i] += n.grad[i];
        }
    }
}

const Tensor& Tape::grad(Var v) const {
    check_mine(v, "grad");
    return node(v.id).grad;
}

void Tape::clear() { nodes_.clear(); }

}  // namespace pgcn
