#include "dimenet/tape.hpp"

#include <algorithm>
#include <cmath>

#include "dimenet/bessel.hpp"

namespace dimenet {

const Tensor& Var::value() const { return tape->node(id).val; }

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor t) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(t);
    return push(std::move(n));
}

namespace {

Tensor unary_apply(const Tensor& x, const std::function<double(double)>& f) {
    Tensor out = x;
    for (auto& v : out.data) v = f(v);
    return out;
}

}  // namespace

Var Tape::affine(Var x, double k, double m) {
    Node n;
    n.op = Op::Affine;
    n.in = {x.id};
    n.daux = {k, m};
    n.val = unary_apply(x.value(), [k, m](double v) { return k * v + m; });
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    check(a.value().same_shape(b.value()), "add: shape mismatch " + a.value().shape_str() + " vs " + b.value().shape_str());
    Node n;
    n.op = Op::Add;
    n.in = {a.id, b.id};
    n.val = a.value();
    const auto& bd = b.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] += bd[i];
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check(a.value().same_shape(b.value()), "sub: shape mismatch");
    Node n;
    n.op = Op::Sub;
    n.in = {a.id, b.id};
    n.val = a.value();
    const auto& bd = b.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] -= bd[i];
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check(a.value().same_shape(b.value()), "mul: shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.in = {a.id, b.id};
    n.val = a.value();
    const auto& bd = b.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] *= bd[i];
    return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
    check(a.value().same_shape(b.value()), "div: shape mismatch");
    Node n;
    n.op = Op::Div;
    n.in = {a.id, b.id};
    n.val = a.value();
    const auto& bd = b.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] /= bd[i];
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    check(A.rank() == 2 && B.rank() == 2 && A.cols() == B.rows(), "matmul: incompatible shapes");
    Node n;
    n.op = Op::MatMul;
    n.in = {a.id, b.id};
    Tensor out(A.rows(), B.cols());
    const std::int64_t M = A.rows(), K = A.cols(), N = B.cols();
    for (std::int64_t i = 0; i < M; ++i) {
        for (std::int64_t k = 0; k < K; ++k) {
            const double aik = A.data[static_cast<std::size_t>(i * K + k)];
            if (aik == 0.0) continue;
            const double* brow = &B.data[static_cast<std::size_t>(k * N)];
            double* orow = &out.data[static_cast<std::size_t>(i * N)];
            for (std::int64_t j = 0; j < N; ++j) orow[j] += aik * brow[j];
        }
    }
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::transpose(Var a) {
    const Tensor& A = a.value();
    check(A.rank() == 2, "transpose: rank-2 only");
    Node n;
    n.op = Op::Transpose;
    n.in = {a.id};
    Tensor out(A.cols(), A.rows());
    for (std::int64_t i = 0; i < A.rows(); ++i)
        for (std::int64_t j = 0; j < A.cols(); ++j) out.at(j, i) = A.at(i, j);
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    check(!xs.empty(), "concat_cols: empty input");
    const std::int64_t R = xs[0].value().rows();
    std::int64_t C = 0;
    for (const auto& x : xs) {
        check(x.value().rank() == 2 && x.value().rows() == R, "concat_cols: row mismatch");
        C += x.value().cols();
    }
    Node n;
    n.op = Op::ConcatCols;
    Tensor out(R, C);
    std::int64_t off = 0;
    for (const auto& x : xs) {
        n.in.push_back(x.id);
        const Tensor& X = x.value();
        for (std::int64_t i = 0; i < R; ++i)
            for (std::int64_t j = 0; j < X.cols(); ++j) out.at(i, off + j) = X.at(i, j);
        off += X.cols();
    }
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::slice_cols(Var x, std::int64_t lo, std::int64_t hi) {
    const Tensor& X = x.value();
    check(0 <= lo && lo < hi && hi <= X.cols(), "slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.in = {x.id};
    n.iaux = {lo, hi};
    Tensor out(X.rows(), hi - lo);
    for (std::int64_t i = 0; i < X.rows(); ++i)
        for (std::int64_t j = lo; j < hi; ++j) out.at(i, j - lo) = X.at(i, j);
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::gather_rows(Var x, const std::vector<std::int64_t>& idx) {
    const Tensor& X = x.value();
    check(X.rank() == 2, "gather_rows: rank-2 only");
    Node n;
    n.op = Op::GatherRows;
    n.in = {x.id};
    n.iaux = idx;
    Tensor out(static_cast<std::int64_t>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        check(idx[k] >= 0 && idx[k] < X.rows(), "gather_rows: index out of range");
        for (std::int64_t j = 0; j < X.cols(); ++j) out.at(static_cast<std::int64_t>(k), j) = X.at(idx[k], j);
    }
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::scatter_add_rows(Var x, const std::vector<std::int64_t>& idx, std::int64_t n_rows) {
    const Tensor& X = x.value();
    check(X.rank() == 2 && X.rows() == static_cast<std::int64_t>(idx.size()), "scatter_add_rows: index count mismatch");
    Node n;
    n.op = Op::ScatterAddRows;
    n.in = {x.id};
    n.iaux.push_back(n_rows);
    n.iaux.insert(n.iaux.end(), idx.begin(), idx.end());
    Tensor out(n_rows, X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        check(idx[k] >= 0 && idx[k] < n_rows, "scatter_add_rows: index out of range");
        for (std::int64_t j = 0; j < X.cols(); ++j) out.at(idx[k], j) += X.at(static_cast<std::int64_t>(k), j);
    }
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::row_sum(Var x) {
    const Tensor& X = x.value();
    check(X.rank() == 2, "row_sum: rank-2 only");
    Node n;
    n.op = Op::RowSum;
    n.in = {x.id};
    Tensor out(X.rows(), 1);
    for (std::int64_t i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (std::int64_t j = 0; j < X.cols(); ++j) s += X.at(i, j);
        out.at(i, 0) = s;
    }
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::col_sum(Var x) {
    const Tensor& X = x.value();
    check(X.rank() == 2, "col_sum: rank-2 only");
    Node n;
    n.op = Op::ColSum;
    n.in = {x.id};
    Tensor out(1, X.cols());
    for (std::int64_t i = 0; i < X.rows(); ++i)
        for (std::int64_t j = 0; j < X.cols(); ++j) out.at(0, j) += X.at(i, j);
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::broadcast_rows(Var x, std::int64_t n_rows) {
    const Tensor& X = x.value();
    check(X.rank() == 2 && X.rows() == 1, "broadcast_rows: expects 1xC");
    Node n;
    n.op = Op::BroadcastRows;
    n.in = {x.id};
    n.iaux = {n_rows};
    Tensor out(n_rows, X.cols());
    for (std::int64_t i = 0; i < n_rows; ++i)
        for (std::int64_t j = 0; j < X.cols(); ++j) out.at(i, j) = X.at(0, j);
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::broadcast_cols(Var x, std::int64_t n_cols) {
    const Tensor& X = x.value();
    check(X.rank() == 2 && X.cols() == 1, "broadcast_cols: expects Rx1");
    Node n;
    n.op = Op::BroadcastCols;
    n.in = {x.id};
    n.iaux = {n_cols};
    Tensor out(X.rows(), n_cols);
    for (std::int64_t i = 0; i < X.rows(); ++i)
        for (std::int64_t j = 0; j < n_cols; ++j) out.at(i, j) = X.at(i, 0);
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::sum_all(Var x) {
    Node n;
    n.op = Op::SumAll;
    n.in = {x.id};
    double s = 0.0;
    for (double v : x.value().data) s += v;
    n.val = Tensor::scalar(s);
    return push(std::move(n));
}

Var Tape::spread_scalar(Var x, std::int64_t r, std::int64_t c) {
    check(x.value().size() == 1, "spread_scalar: expects 1x1");
    Node n;
    n.op = Op::SpreadScalar;
    n.in = {x.id};
    n.iaux = {r, c};
    Tensor out(r, c);
    for (auto& v : out.data) v = x.value().data[0];
    n.val = std::move(out);
    return push(std::move(n));
}

Var Tape::sin(Var x) {
    Node n;
    n.op = Op::Sin;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::sin(v); });
    return push(std::move(n));
}

Var Tape::cos(Var x) {
    Node n;
    n.op = Op::Cos;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::cos(v); });
    return push(std::move(n));
}

Var Tape::sqrt(Var x) {
    Node n;
    n.op = Op::Sqrt;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::sqrt(v); });
    return push(std::move(n));
}

Var Tape::exp(Var x) {
    Node n;
    n.op = Op::Exp;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::exp(v); });
    return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
    Node n;
    n.op = Op::Sigmoid;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
    return push(std::move(n));
}

Var Tape::pow_int(Var x, std::int64_t p) {
    check(p >= 0, "pow_int: exponent must be >= 0");
    Node n;
    n.op = Op::PowInt;
    n.in = {x.id};
    n.iaux = {p};
    n.val = unary_apply(x.value(), [p](double v) { return std::pow(v, static_cast<double>(p)); });
    return push(std::move(n));
}

Var Tape::clamp(Var x, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.in = {x.id};
    n.daux = {lo, hi};
    n.val = unary_apply(x.value(), [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); });
    return push(std::move(n));
}

Var Tape::acos(Var x) {
    Node n;
    n.op = Op::Acos;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::acos(v); });
    return push(std::move(n));
}

Var Tape::abs(Var x) {
    Node n;
    n.op = Op::Abs;
    n.in = {x.id};
    n.val = unary_apply(x.value(), [](double v) { return std::abs(v); });
    return push(std::move(n));
}

Var Tape::mul_sign(Var a, Var x) {
    check(a.value().same_shape(x.value()), "mul_sign: shape mismatch");
    Node n;
    n.op = Op::MulSign;
    n.in = {a.id, x.id};
    n.val = a.value();
    const auto& xd = x.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) {
        if (xd[i] < 0.0) n.val.data[i] = -n.val.data[i];
        else if (xd[i] == 0.0) n.val.data[i] = 0.0;
    }
    return push(std::move(n));
}

Var Tape::mask_interior(Var a, Var x, double lo, double hi) {
    check(a.value().same_shape(x.value()), "mask_interior: shape mismatch");
    Node n;
    n.op = Op::MaskInterior;
    n.in = {a.id, x.id};
    n.daux = {lo, hi};
    n.val = a.value();
    const auto& xd = x.value().data;
    for (std::size_t i = 0; i < n.val.data.size(); ++i)
        if (!(xd[i] > lo && xd[i] < hi)) n.val.data[i] = 0.0;
    return push(std::move(n));
}

Var Tape::sph_bessel(int l, Var x) {
    check(l >= 0, "sph_bessel: order must be >= 0");
    Node n;
    n.op = Op::SphBesselJ;
    n.in = {x.id};
    n.iaux = {l};
    n.val = unary_apply(x.value(), [l](double v) { return sph_bessel_j(l, v); });
    return push(std::move(n));
}

Var Tape::bilinear(Var s, Var w, Var g) {
    const Tensor& S = s.value();
    const Tensor& W = w.value();
    const Tensor& G = g.value();
    check(S.rank() == 2 && W.rank() == 3 && G.rank() == 2, "bilinear: expects (TxB, BxF1xF2, TxF1)");
    check(S.cols() == W.shape[0] && G.cols() == W.shape[1] && S.rows() == G.rows(), "bilinear: shape mismatch");
    Node n;
    n.op = Op::BilinOut;
    n.in = {s.id, w.id, g.id};
    const std::int64_t T = S.rows(), B = W.shape[0], F1 = W.shape[1], F2 = W.shape[2];
    Tensor out(T, F2);
    for (std::int64_t t = 0; t < T; ++t) {
        for (std::int64_t b = 0; b < B; ++b) {
            const double stb = S.at(t, b);
            if (stb == 0.0) continue;
            for (std::int64_t f1 = 0; f1 < F1; ++f1) {
                const double coef = stb * G.at(t, f1);
                if (coef == 0.0) continue;
                const double* wrow = &W.data[static_cast<std::size_t>((b * F1 + f1) * F2)];
                double* orow = &out.data[static_cast<std::size_t>(t * F2)];
                for (std::int64_t f2 = 0; f2 < F2; ++f2) orow[f2] += coef * wrow[f2];
            }
        }
    }
    n.val = std::move(out);
    return push(std::move(n));
}

namespace {

// Adjoint contractions of the trilinear form out[t,f2] = S[t,b] W[b,f1,f2] G[t,f1].
Tensor bilin_grad_s(const Tensor& W, const Tensor& G, const Tensor& Gy) {
    const std::int64_t T = G.rows(), B = W.shape[0], F1 = W.shape[1], F2 = W.shape[2];
    Tensor out(T, B);
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t b = 0; b < B; ++b) {
            double s = 0.0;
            for (std::int64_t f1 = 0; f1 < F1; ++f1) {
                const double gt = G.at(t, f1);
                if (gt == 0.0) continue;
                const double* wrow = &W.data[static_cast<std::size_t>((b * F1 + f1) * F2)];
                const double* gyrow = &Gy.data[static_cast<std::size_t>(t * F2)];
                double acc = 0.0;
                for (std::int64_t f2 = 0; f2 < F2; ++f2) acc += wrow[f2] * gyrow[f2];
                s += gt * acc;
            }
            out.at(t, b) = s;
        }
    return out;
}

Tensor bilin_grad_w(const Tensor& S, const Tensor& G, const Tensor& Gy) {
    const std::int64_t T = S.rows(), B = S.cols(), F1 = G.cols(), F2 = Gy.cols();
    Tensor out(B, F1, F2);
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t b = 0; b < B; ++b) {
            const double stb = S.at(t, b);
            if (stb == 0.0) continue;
            for (std::int64_t f1 = 0; f1 < F1; ++f1) {
                const double coef = stb * G.at(t, f1);
                if (coef == 0.0) continue;
                double* orow = &out.data[static_cast<std::size_t>((b * F1 + f1) * F2)];
                const double* gyrow = &Gy.data[static_cast<std::size_t>(t * F2)];
                for (std::int64_t f2 = 0; f2 < F2; ++f2) orow[f2] += coef * gyrow[f2];
            }
        }
    return out;
}

Tensor bilin_grad_g(const Tensor& S, const Tensor& W, const Tensor& Gy) {
    const std::int64_t T = S.rows(), B = W.shape[0], F1 = W.shape[1], F2 = W.shape[2];
    Tensor out(T, F1);
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t b = 0; b < B; ++b) {
            const double stb = S.at(t, b);
            if (stb == 0.0) continue;
            for (std::int64_t f1 = 0; f1 < F1; ++f1) {
                const double* wrow = &W.data[static_cast<std::size_t>((b * F1 + f1) * F2)];
                const double* gyrow = &Gy.data[static_cast<std::size_t>(t * F2)];
                double acc = 0.0;
                for (std::int64_t f2 = 0; f2 < F2; ++f2) acc += wrow[f2] * gyrow[f2];
                out.at(t, f1) += stb * acc;
            }
        }
    return out;
}

}  // namespace

Var Tape::envelope_poly(Var t, int p) {
    check(p >= 1, "envelope_poly: p must be >= 1");
    const double a = -(p + 1.0) * (p + 2.0) / 2.0;
    const double b = p * (p + 2.0);
    const double c = -p * (p + 1.0) / 2.0;
    Var tp = pow_int(t, p);
    Var tp1 = mul(tp, t);
    Var tp2 = mul(tp1, t);
    return add(affine(tp, a, 1.0), add(scale(tp1, b), scale(tp2, c)));
}

void Tape::accumulate(std::vector<int>& adj, int target, Var g) {
    if (adj[static_cast<std::size_t>(target)] < 0) {
        adj[static_cast<std::size_t>(target)] = g.id;
    } else {
        adj[static_cast<std::size_t>(target)] = add(Var{this, adj[static_cast<std::size_t>(target)]}, g).id;
    }
}

void Tape::backprop_node(int id, Var g, std::vector<int>& adj) {
    // By value: emitting VJP nodes below may reallocate nodes_.
    const Node nd = nodes_[static_cast<std::size_t>(id)];
    Var self{this, id};
    switch (nd.op) {
        case Op::Leaf:
            break;
        case Op::Affine:
            accumulate(adj, nd.in[0], scale(g, nd.daux[0]));
            break;
        case Op::Add:
            accumulate(adj, nd.in[0], g);
            accumulate(adj, nd.in[1], g);
            break;
        case Op::Sub:
            accumulate(adj, nd.in[0], g);
            accumulate(adj, nd.in[1], neg(g));
            break;
        case Op::Mul:
            accumulate(adj, nd.in[0], mul(g, Var{this, nd.in[1]}));
            accumulate(adj, nd.in[1], mul(g, Var{this, nd.in[0]}));
            break;
        case Op::Div: {
            Var b{this, nd.in[1]};
            accumulate(adj, nd.in[0], div(g, b));
            accumulate(adj, nd.in[1], neg(mul(g, div(self, b))));
            break;
        }
        case Op::MatMul:
            accumulate(adj, nd.in[0], matmul(g, transpose(Var{this, nd.in[1]})));
            accumulate(adj, nd.in[1], matmul(transpose(Var{this, nd.in[0]}), g));
            break;
        case Op::Transpose:
            accumulate(adj, nd.in[0], transpose(g));
            break;
        case Op::ConcatCols: {
            std::int64_t off = 0;
            for (int src : nd.in) {
                const std::int64_t w = nodes_[static_cast<std::size_t>(src)].val.cols();
                accumulate(adj, src, slice_cols(g, off, off + w));
                off += w;
            }
            break;
        }
        case Op::SliceCols: {
            const std::int64_t xr = nodes_[static_cast<std::size_t>(nd.in[0])].val.rows();
            const std::int64_t xc = nodes_[static_cast<std::size_t>(nd.in[0])].val.cols();
            const std::int64_t lo = nd.iaux[0], hi = nd.iaux[1];
            std::vector<Var> parts;
            if (lo > 0) parts.push_back(zeros(xr, lo));
            parts.push_back(g);
            if (hi < xc) parts.push_back(zeros(xr, xc - hi));
            accumulate(adj, nd.in[0], parts.size() == 1 ? g : concat_cols(parts));
            break;
        }
        case Op::GatherRows: {
            const std::int64_t xr = nodes_[static_cast<std::size_t>(nd.in[0])].val.rows();
            accumulate(adj, nd.in[0], scatter_add_rows(g, nd.iaux, xr));
            break;
        }
        case Op::ScatterAddRows: {
            std::vector<std::int64_t> idx(nd.iaux.begin() + 1, nd.iaux.end());
            accumulate(adj, nd.in[0], gather_rows(g, idx));
            break;
        }
        case Op::RowSum:
            accumulate(adj, nd.in[0], broadcast_cols(g, nodes_[static_cast<std::size_t>(nd.in[0])].val.cols()));
            break;
        case Op::ColSum:
            accumulate(adj, nd.in[0], broadcast_rows(g, nodes_[static_cast<std::size_t>(nd.in[0])].val.rows()));
            break;
        case Op::BroadcastRows:
            accumulate(adj, nd.in[0], col_sum(g));
            break;
        case Op::BroadcastCols:
            accumulate(adj, nd.in[0], row_sum(g));
            break;
        case Op::SumAll: {
            const Tensor& X = nodes_[static_cast<std::size_t>(nd.in[0])].val;
            accumulate(adj, nd.in[0], spread_scalar(g, X.rows(), X.cols()));
            break;
        }
        case Op::SpreadScalar:
            accumulate(adj, nd.in[0], sum_all(g));
            break;
        case Op::Sin:
            accumulate(adj, nd.in[0], mul(g, cos(Var{this, nd.in[0]})));
            break;
        case Op::Cos:
            accumulate(adj, nd.in[0], neg(mul(g, sin(Var{this, nd.in[0]}))));
            break;
        case Op::Sqrt:
            accumulate(adj, nd.in[0], scale(div(g, self), 0.5));
            break;
        case Op::Exp:
            accumulate(adj, nd.in[0], mul(g, self));
            break;
        case Op::Sigmoid:
            // y' = y (1 - y)
            accumulate(adj, nd.in[0], mul(g, mul(self, affine(self, -1.0, 1.0))));
            break;
        case Op::PowInt: {
            const std::int64_t p = nd.iaux[0];
            if (p != 0)
                accumulate(adj, nd.in[0],
                           scale(mul(g, pow_int(Var{this, nd.in[0]}, p - 1)), static_cast<double>(p)));
            break;
        }
        case Op::Clamp:
            accumulate(adj, nd.in[0], mask_interior(g, Var{this, nd.in[0]}, nd.daux[0], nd.daux[1]));
            break;
        case Op::Acos: {
            Var x{this, nd.in[0]};
            accumulate(adj, nd.in[0], neg(div(g, sqrt(affine(mul(x, x), -1.0, 1.0)))));
            break;
        }
        case Op::Abs:
            accumulate(adj, nd.in[0], mul_sign(g, Var{this, nd.in[0]}));
            break;
        case Op::MulSign:
            accumulate(adj, nd.in[0], mul_sign(g, Var{this, nd.in[1]}));
            break;
        case Op::MaskInterior:
            accumulate(adj, nd.in[0], mask_interior(g, Var{this, nd.in[1]}, nd.daux[0], nd.daux[1]));
            break;
        case Op::SphBesselJ: {
            const int l = static_cast<int>(nd.iaux[0]);
            Var x{this, nd.in[0]};
            if (l == 0) {
                accumulate(adj, nd.in[0], neg(mul(g, sph_bessel(1, x))));
            } else {
                // j_l' = j_{l-1} - (l+1)/x j_l
                Var d = sub(sph_bessel(l - 1, x), scale(div(self, x), l + 1.0));
                accumulate(adj, nd.in[0], mul(g, d));
            }
            break;
        }
        case Op::BilinOut: {
            Var s{this, nd.in[0]}, w{this, nd.in[1]}, gg{this, nd.in[2]};
            Node ns;
            ns.op = Op::BilinGradS;
            ns.in = {w.id, gg.id, g.id};
            ns.val = bilin_grad_s(w.value(), gg.value(), g.value());
            accumulate(adj, nd.in[0], push(std::move(ns)));
            Node nw;
            nw.op = Op::BilinGradW;
            nw.in = {s.id, gg.id, g.id};
            nw.val = bilin_grad_w(s.value(), gg.value(), g.value());
            accumulate(adj, nd.in[1], push(std::move(nw)));
            Node ng;
            ng.op = Op::BilinGradG;
            ng.in = {s.id, w.id, g.id};
            ng.val = bilin_grad_g(s.value(), w.value(), g.value());
            accumulate(adj, nd.in[2], push(std::move(ng)));
            break;
        }
        case Op::BilinGradS: {
            // out = f(W, G, Gy); all three partials are the sibling contractions.
            Var w{this, nd.in[0]}, gv{this, nd.in[1]}, gy{this, nd.in[2]};
            Node nw;
            nw.op = Op::BilinGradW;
            nw.in = {g.id, gv.id, gy.id};
            nw.val = bilin_grad_w(g.value(), gv.value(), gy.value());
            accumulate(adj, nd.in[0], push(std::move(nw)));
            Node ng;
            ng.op = Op::BilinGradG;
            ng.in = {g.id, w.id, gy.id};
            ng.val = bilin_grad_g(g.value(), w.value(), gy.value());
            accumulate(adj, nd.in[1], push(std::move(ng)));
            accumulate(adj, nd.in[2], bilinear(g, w, gv));
            break;
        }
        case Op::BilinGradW: {
            Var s{this, nd.in[0]}, gv{this, nd.in[1]}, gy{this, nd.in[2]};
            Node ns;
            ns.op = Op::BilinGradS;
            ns.in = {g.id, gv.id, gy.id};
            ns.val = bilin_grad_s(g.value(), gv.value(), gy.value());
            accumulate(adj, nd.in[0], push(std::move(ns)));
            Node ng;
            ng.op = Op::BilinGradG;
            ng.in = {s.id, g.id, gy.id};
            ng.val = bilin_grad_g(s.value(), g.value(), gy.value());
            accumulate(adj, nd.in[1], push(std::move(ng)));
            accumulate(adj, nd.in[2], bilinear(s, g, gv));
            break;
        }
        case Op::BilinGradG: {
            Var s{this, nd.in[0]}, w{this, nd.in[1]}, gy{this, nd.in[2]};
            Node ns;
            ns.op = Op::BilinGradS;
            ns.in = {w.id, g.id, gy.id};
            ns.val = bilin_grad_s(w.value(), g.value(), gy.value());
            accumulate(adj, nd.in[0], push(std::move(ns)));
            Node nw;
            nw.op = Op::BilinGradW;
            nw.in = {s.id, g.id, gy.id};
            nw.val = bilin_grad_w(s.value(), g.value(), gy.value());
            accumulate(adj, nd.in[1], push(std::move(nw)));
            accumulate(adj, nd.in[2], bilinear(s, w, g));
            break;
        }
    }
}

std::vector<Var> Tape::gradient(Var root, const std::vector<Var>& wrt) {
    check(root.tape == this, "gradient: root from another tape");
    check(root.value().size() == 1, "gradient: root must be scalar");
    const int r = root.id;
    std::vector<int> adj(static_cast<std::size_t>(r) + 1, -1);
    adj[static_cast<std::size_t>(r)] = constant(1.0).id;
    for (int i = r; i >= 0; --i) {
        const int g = adj[static_cast<std::size_t>(i)];
        if (g < 0) continue;
        backprop_node(i, Var{this, g}, adj);
    }
    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const Var& v : wrt) {
        check(v.tape == this, "gradient: wrt var from another tape");
        if (v.id <= r && adj[static_cast<std::size_t>(v.id)] >= 0) {
            out.push_back(Var{this, adj[static_cast<std::size_t>(v.id)]});
        } else {
            const Tensor& t = v.value();
            Tensor z = t;
            for (auto& x : z.data) x = 0.0;
            out.push_back(leaf(std::move(z)));
        }
    }
    return out;
}

double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& positions,
                               const Tensor& analytic_grad, double h, double abs_floor) {
    check(positions.same_shape(analytic_grad), "finite_difference_check: shape mismatch");
    double max_err = 0.0;
    Tensor x = positions;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + h;
        const double fp = f(x);
        x.data[i] = orig - h;
        const double fm = f(x);
        x.data[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double g = analytic_grad.data[i];
        const double diff = std::abs(fd - g);
        if (diff <= abs_floor) continue;  // below the floor, FD noise dominates
        max_err = std::max(max_err, diff / std::max(std::abs(fd), std::abs(g)));
    }
    return max_err;
}

}  // namespace dimenet
