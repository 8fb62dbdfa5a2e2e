#ifndef DIMENET_TAPE_HPP
#define DIMENET_TAPE_HPP

#include <array>
#include <functional>
#include <vector>

#include "dimenet/tensor.hpp"

namespace dimenet {

/// Reverse-mode differentiation engine. Every model primitive appends an
/// eagerly evaluated node to an append-only tape. Backward passes build
/// adjoints out of the same primitives, so gradients are themselves
/// differentiable (forces can be trained through a second backward pass).
class Tape;

/// Handle to a tape node: a value plus enough provenance to accumulate
/// adjoints.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
    double scalar() const { return value().data.at(0); }
};

enum class Op {
    Leaf,
    Affine,     // k*x + m elementwise
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Transpose,
    ConcatCols,
    SliceCols,  // iaux: [lo, hi)
    GatherRows,
    ScatterAddRows,  // iaux: [n_out_rows, idx...]
    RowSum,          // RxC -> Rx1
    ColSum,          // RxC -> 1xC
    BroadcastRows,   // 1xC -> RxC, iaux: [R]
    BroadcastCols,   // Rx1 -> RxC, iaux: [C]
    SumAll,          // -> 1x1
    SpreadScalar,    // 1x1 -> RxC, iaux: [R, C]
    Sin,
    Cos,
    Sqrt,
    Exp,
    Sigmoid,
    PowInt,        // iaux: [n >= 0]
    Clamp,         // daux: [lo, hi]
    Acos,
    Abs,
    MulSign,       // (a, x) -> a * sign(x); derivative flows through a only
    MaskInterior,  // (a, x) -> a where lo < x < hi else 0; daux: [lo, hi]
    SphBesselJ,    // iaux: [l]; x must be > 0 elementwise
    BilinOut,      // (S TxB, W BxF1xF2, G TxF1) -> TxF2
    BilinGradS,    // (W, G, Gy TxF2) -> TxB
    BilinGradW,    // (S, G, Gy) -> BxF1xF2
    BilinGradG,    // (S, W, Gy) -> TxF1
};

struct Node {
    Op op = Op::Leaf;
    std::vector<int> in;
    Tensor val;
    std::vector<std::int64_t> iaux;
    std::vector<double> daux;
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(nodes_.size()); }

    Var leaf(Tensor t);
    Var constant(double v) { return leaf(Tensor::scalar(v)); }
    Var zeros(std::int64_t r, std::int64_t c) { return leaf(Tensor(r, c)); }

    Var affine(Var x, double k, double m);
    Var neg(Var x) { return affine(x, -1.0, 0.0); }
    Var scale(Var x, double k) { return affine(x, k, 0.0); }
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var concat_cols(const std::vector<Var>& xs);
    Var slice_cols(Var x, std::int64_t lo, std::int64_t hi);
    Var gather_rows(Var x, const std::vector<std::int64_t>& idx);
    Var scatter_add_rows(Var x, const std::vector<std::int64_t>& idx, std::int64_t n_rows);
    Var row_sum(Var x);
    Var col_sum(Var x);
    Var broadcast_rows(Var x, std::int64_t n_rows);
    Var broadcast_cols(Var x, std::int64_t n_cols);
    Var sum_all(Var x);
    Var spread_scalar(Var x, std::int64_t r, std::int64_t c);
    Var sin(Var x);
    Var cos(Var x);
    Var sqrt(Var x);
    Var exp(Var x);
    Var sigmoid(Var x);
    Var swish(Var x) { return mul(x, sigmoid(x)); }
    Var pow_int(Var x, std::int64_t n);
    Var clamp(Var x, double lo, double hi);
    Var acos(Var x);
    Var abs(Var x);
    Var mul_sign(Var a, Var x);
    Var mask_interior(Var a, Var x, double lo, double hi);
    Var sph_bessel(int l, Var x);
    Var bilinear(Var s, Var w, Var g);

    /// Smooth cutoff envelope u(t), composed from tape primitives.
    Var envelope_poly(Var t, int p);

    /// Reverse-mode gradient of a 1x1 root with respect to each var in
    /// `wrt`. Returned adjoints are ordinary tape vars and can be
    /// differentiated again. Vars with no path to the root get zeros.
    std::vector<Var> gradient(Var root, const std::vector<Var>& wrt);

  private:
    Var push(Node n);
    void backprop_node(int id, Var g, std::vector<int>& adj);
    void accumulate(std::vector<int>& adj, int target, Var g);

    std::vector<Node> nodes_;
};

/// Max relative error between an analytic position gradient and central
/// finite differences of f; absolute differences at or below abs_floor
/// are ignored (finite-difference noise). Positions are a flat Nx3 tensor.
double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& positions,
                               const Tensor& analytic_grad, double h, double abs_floor = 1e-8);

}  // namespace dimenet

#endif
