#pragma once

#include <functional>
#include <vector>

#include "pgcn/tensor.hpp"

namespace pgcn {

class Tape;

// Handle to a tape node. Cheap to copy; valid while the tape lives and is
// not cleared.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

// Ordered record of forward operations. Nodes are appended in execution
// order, so walking the record backward visits them in reverse topological
// order; gradients accumulate additively where a value fans out. One
// training step builds one tape on one logical thread.
class Tape {
public:
    // ---- leaves ----
    Var constant(Tensor v);
    // Leaf bound to a Parameter: backward() adds the accumulated node
    // gradient into p.grad.
    Var param(Parameter& p);

    // ---- linear algebra ----
    // Strict rank-2 matrix product with gradients da = g b^T, db = a^T g.
    Var matmul(Var a, Var b);
    // a * b^T for rank-2 operands.
    Var matmul_nt(Var a, Var b);
    // Batched product: a is [B,m,k] or [m,k], b is [B,k,n] or [k,n]
    // (or [B,n,k]/[n,k] with transpose_b). Rank-2 operands broadcast
    // across the batch; output is rank-3 if either operand is, else rank-2.
    Var bmm(Var a, Var b, bool transpose_b = false);
    // Mix node features: adj is [N,N] (shared) or [B,N,N] (per sample),
    // z is [B,N,T,D]; out[b,i,t,d] = sum_j adj[(b,)i,j] * z[b,j,t,d].
    Var node_mix(Var adj, Var z);
    // Apply w: [C,D] along the last axis of x: [...,C] -> [...,D].
    Var channel_map(Var x, Var w);

    // ---- elementwise ----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var add_bias(Var x, Var bias);  // bias: [D] broadcast over leading axes
    Var hadamard(Var a, Var b);     // identical shapes
    Var mul_const(Var x, Tensor w);
    Var add_const(Var x, Tensor c);
    Var scale(Var x, double a);
    Var affine(Var x, double a, double b);  // a*x + b
    Var relu(Var x);                        // subgradient at 0 is 0
    Var tanh(Var x);
    Var sigmoid(Var x);
    Var abs(Var x);  // subgradient at 0 is 0

    // Softmax over the last axis with per-row max subtraction. The row
    // denominator is accumulated in ascending value order, which makes the
    // result invariant under permutations of the row entries (bitwise).
    Var row_softmax(Var x);

    // Valid-mode dilated causal convolution along the second-to-last axis.
    // x: [...,T,C], kernel: [P,C,D], output [...,T-d*(P-1),D] where
    // out(t) = sum_p kernel(p) . x(t - d*p); kernel tap 0 reads the
    // current step, tap p reads d*p steps in the past.
    Var dilated_causal_conv(Var x, Var kernel, int dilation);

    // Keep the trailing `keep_last` steps along the second-to-last axis.
    Var crop_time(Var x, int keep_last);

    Var sum(Var x);  // -> scalar [1]
    Var reshape(Var x, Shape new_shape);

    // Reverse accumulation from a scalar loss. Fills every bound
    // Parameter's grad with d loss / d parameter (additively).
    void backward(Var loss);

    // Node-level gradient, valid after backward(). Empty tensor when the
    // node needed no gradient.
    const Tensor& grad(Var v) const;

    void clear();
    std::size_t size() const { return nodes_.size(); }

private:
    friend struct Var;

    struct Node {
        Tensor value;
        Tensor grad;  // allocated during backward for needs_grad nodes
        bool needs_grad = false;
        std::function<void(Tape&)> backprop;  // scatters this node's grad to parents
        Parameter* bound = nullptr;
    };

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Var make(Tensor value, bool needs_grad, std::function<void(Tape&)> backprop);
    Var check_mine(Var v, const char* op) const;

    Var bmm_impl(Var a, Var b, bool transpose_b, const Shape* out_shape_override, const char* opname);
    Var unary(Var x, int kind);

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->node(id).value; }

}  // namespace pgcn
