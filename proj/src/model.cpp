#include "dimenet/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dimenet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kCosClamp = 1e-10;
}  // namespace

double ModelConfig::gamma_effective() const {
    if (gaussian_gamma > 0.0) return gaussian_gamma;
    // Adjacent Gaussians cross at half the peak height.
    const double spacing = n_gaussian > 1 ? basis.cutoff / (n_gaussian - 1.0) : basis.cutoff;
    return 4.0 * std::log(2.0) / (spacing * spacing);
}

void ModelConfig::validate() const {
    basis.validate();
    check(emb_size >= 1, "ModelConfig: emb_size must be >= 1");
    check(num_blocks >= 1, "ModelConfig: num_blocks must be >= 1");
    check(num_targets >= 1, "ModelConfig: num_targets must be >= 1");
    check(n_bilinear >= 1, "ModelConfig: n_bilinear must be >= 1");
    check(num_residual >= 0, "ModelConfig: num_residual must be >= 0");
    check(num_output_dense >= 0, "ModelConfig: num_output_dense must be >= 0");
    check(max_z >= 1, "ModelConfig: max_z must be >= 1");
}

int ParamSet::add(const std::string& name, Tensor t) {
    names.push_back(name);
    values.push_back(std::move(t));
    return static_cast<int>(values.size()) - 1;
}

int ParamSet::index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

Tensor& ParamSet::get(const std::string& name) {
    const int i = index(name);
    check(i >= 0, "ParamSet: unknown parameter " + name);
    return values[static_cast<std::size_t>(i)];
}

const Tensor& ParamSet::get(const std::string& name) const {
    const int i = index(name);
    check(i >= 0, "ParamSet: unknown parameter " + name);
    return values[static_cast<std::size_t>(i)];
}

std::int64_t ParamSet::total_size() const {
    std::int64_t s = 0;
    for (const auto& t : values) s += t.size();
    return s;
}

RootTable make_roots(const ModelConfig& cfg) {
    return find_bessel_roots(cfg.n_shbf_effective() - 1, cfg.basis.n_srbf);
}

namespace {

struct ParamBuilder {
    ParamSet set;
    std::mt19937_64 rng;

    explicit ParamBuilder(std::uint64_t seed) : rng(seed) {}

    void dense(const std::string& name, std::int64_t fan_in, std::int64_t fan_out, bool bias = true) {
        Tensor w(fan_in, fan_out);
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        for (auto& v : w.data) v = dist(rng);
        set.add(name + ".W", std::move(w));
        if (bias) set.add(name + ".b", Tensor(1, fan_out));
    }

    void matrix(const std::string& name, std::int64_t r, std::int64_t c) {
        Tensor w(r, c);
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(r)));
        for (auto& v : w.data) v = dist(rng);
        set.add(name, std::move(w));
    }

    void bilinear_tensor(const std::string& name, std::int64_t b, std::int64_t f) {
        Tensor w(b, f, f);
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(b * f)));
        for (auto& v : w.data) v = dist(rng);
        set.add(name, std::move(w));
    }
};

void build_output_block_params(ParamBuilder& pb, const ModelConfig& cfg, const std::string& prefix,
                               bool with_rbf_gate, int final_width) {
    const int F = cfg.emb_size;
    if (with_rbf_gate) pb.matrix(prefix + ".W_rbf", cfg.n_rbf_effective(), F);
    for (int d = 0; d < cfg.num_output_dense; ++d) pb.dense(prefix + ".d" + std::to_string(d), F, F);
    pb.matrix(prefix + ".W_final", F, final_width);
}

}  // namespace

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamBuilder pb(seed);
    const int F = cfg.emb_size;
    const int n_rbf = cfg.n_rbf_effective();

    {
        Tensor emb(cfg.max_z + 1, F);
        const double r = std::sqrt(3.0);
        std::uniform_real_distribution<double> dist(-r, r);
        for (auto& v : emb.data) v = dist(pb.rng);
        pb.set.add("atom_emb", std::move(emb));
    }

    if (cfg.rbf_mode == RbfMode::Bessel) {
        Tensor k(1, cfg.basis.n_rbf);
        auto kv = default_wave_numbers(cfg.basis.n_rbf, cfg.basis.cutoff);
        k.data.assign(kv.begin(), kv.end());
        pb.set.add("k_rbf", std::move(k));
    }

    if (!cfg.node_mode) pb.dense("embed", 2 * F + n_rbf, F);

    for (int b = 0; b < cfg.num_blocks; ++b) {
        const std::string p = "int" + std::to_string(b);
        pb.dense(p + ".src", F, F);
        pb.matrix(p + ".W_rbf", n_rbf, F);
        if (!cfg.node_mode) {
            pb.matrix(p + ".W_sbf", cfg.n_shbf_effective() * cfg.basis.n_srbf, cfg.n_bilinear);
            pb.bilinear_tensor(p + ".W_bil", cfg.n_bilinear, F);
        }
        pb.dense(p + ".self", F, F);
        for (int r = 0; r < cfg.num_residual; ++r) {
            const std::string rp = p + ".res" + std::to_string(r);
            pb.dense(rp + ".l1", F, F);
            pb.dense(rp + ".l2", F, F);
        }
    }

    const bool separate = (cfg.num_targets > 1 && !cfg.shared_output_blocks);
    for (int o = 0; o <= cfg.num_blocks; ++o) {
        const std::string p = "out" + std::to_string(o);
        if (separate) {
            for (int m = 0; m < cfg.num_targets; ++m)
                build_output_block_params(pb, cfg, p + ".t" + std::to_string(m), !cfg.node_mode, 1);
        } else {
            build_output_block_params(pb, cfg, p, !cfg.node_mode, cfg.num_targets);
        }
    }
    return std::move(pb.set);
}

namespace {

/// Forward-pass workspace: the tape plus named parameter leaves.
struct Ctx {
    Tape& tape;
    const ParamSet& params;
    std::vector<Var> vars;  // leaves, aligned with params order

    Var p(const std::string& name) const {
        const int i = params.index(name);
        check(i >= 0, "forward: missing parameter " + name);
        return vars[static_cast<std::size_t>(i)];
    }
};

Var dense_swish(Ctx& c, Var x, const std::string& name) {
    Var y = c.tape.matmul(x, c.p(name + ".W"));
    return c.tape.swish(c.tape.add(y, c.tape.broadcast_rows(c.p(name + ".b"), y.value().rows())));
}

Var residual_stack(Ctx& c, Var x, const std::string& prefix, int count) {
    for (int r = 0; r < count; ++r) {
        const std::string rp = prefix + ".res" + std::to_string(r);
        x = c.tape.add(x, dense_swish(c, dense_swish(c, x, rp + ".l1"), rp + ".l2"));
    }
    return x;
}

/// Enveloped radial basis per edge, E x n_rbf.
Var edge_rbf(Ctx& c, Var d, const ModelConfig& cfg) {
    Tape& t = c.tape;
    const double cut = cfg.cutoff();
    const std::int64_t E = d.value().rows();
    Var u = t.envelope_poly(t.scale(d, 1.0 / cut), cfg.basis.envelope_p);
    if (cfg.rbf_mode == RbfMode::Gaussian) {
        const int N = cfg.n_gaussian;
        Tensor mu(1, N);
        for (int n = 0; n < N; ++n) mu.at(0, n) = (N == 1) ? 0.0 : cut * n / (N - 1.0);
        Var diff = t.sub(t.broadcast_cols(d, N), t.broadcast_rows(t.leaf(std::move(mu)), E));
        Var gauss = t.exp(t.scale(t.mul(diff, diff), -cfg.gamma_effective()));
        return t.mul(t.broadcast_cols(u, N), gauss);
    }
    const int N = cfg.basis.n_rbf;
    Var arg = t.mul(t.broadcast_cols(d, N), t.broadcast_rows(c.p("k_rbf"), E));
    Var pref = t.scale(t.div(u, d), std::sqrt(2.0 / cut));
    return t.mul(t.broadcast_cols(pref, N), t.sin(arg));
}

/// Enveloped 2D spherical Fourier-Bessel basis per triplet,
/// T x (n_shbf * n_srbf), flattened (l, n) -> l*n_srbf + (n-1).
Var triplet_sbf(Ctx& c, Var d_kj, Var alpha, const ModelConfig& cfg, const RootTable& roots) {
    Tape& t = c.tape;
    const double cut = cfg.cutoff();
    const int n_shbf = cfg.n_shbf_effective();
    const int n_srbf = cfg.basis.n_srbf;
    Var u = t.envelope_poly(t.scale(d_kj, 1.0 / cut), cfg.basis.envelope_p);
    Var ca = t.cos(alpha);
    std::vector<Var> cols;
    cols.reserve(static_cast<std::size_t>(n_shbf * n_srbf));
    Var p_prev, p_cur;  // Legendre recurrence on cos(alpha)
    for (int l = 0; l < n_shbf; ++l) {
        if (l == 0) {
            p_cur = t.affine(ca, 0.0, 1.0);
        } else if (l == 1) {
            p_prev = p_cur;
            p_cur = ca;
        } else {
            Var p_next = t.scale(
                t.sub(t.scale(t.mul(ca, p_cur), 2.0 * l - 1.0), t.scale(p_prev, l - 1.0)), 1.0 / l);
            p_prev = p_cur;
            p_cur = p_next;
        }
        Var y = t.scale(p_cur, std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)));
        Var angular = t.mul(u, y);
        for (int n = 1; n <= n_srbf; ++n) {
            const double z = roots.root(l, n);
            const double jn1 = sph_bessel_j(l + 1, z);
            const double norm = std::sqrt(2.0 / (cut * cut * cut * jn1 * jn1));
            Var radial = t.sph_bessel(l, t.scale(d_kj, z / cut));
            cols.push_back(t.scale(t.mul(radial, angular), norm));
        }
    }
    return t.concat_cols(cols);
}

Var output_block_single(Ctx& c, Var m_or_h, Var e_rbf, const std::vector<std::int64_t>& dst, int n_atoms,
                        const ModelConfig& cfg, const std::string& prefix) {
    Tape& t = c.tape;
    Var h = m_or_h;
    if (!cfg.node_mode) {
        Var gated = t.mul(t.matmul(e_rbf, c.p(prefix + ".W_rbf")), m_or_h);
        h = t.scatter_add_rows(gated, dst, n_atoms);
    }
    for (int d = 0; d < cfg.num_output_dense; ++d) h = dense_swish(c, h, prefix + ".d" + std::to_string(d));
    return t.matmul(h, c.p(prefix + ".W_final"));  // no bias: empty neighborhoods contribute zero
}

/// N x T atom-wise outputs for output block `o` (handles the
/// per-target-separate layout).
Var output_block(Ctx& c, Var m_or_h, Var e_rbf, const std::vector<std::int64_t>& dst, int n_atoms,
                 const ModelConfig& cfg, int o) {
    const std::string p = "out" + std::to_string(o);
    const bool separate = (cfg.num_targets > 1 && !cfg.shared_output_blocks);
    if (!separate) return output_block_single(c, m_or_h, e_rbf, dst, n_atoms, cfg, p);
    std::vector<Var> per_target;
    per_target.reserve(static_cast<std::size_t>(cfg.num_targets));
    for (int m = 0; m < cfg.num_targets; ++m)
        per_target.push_back(output_block_single(c, m_or_h, e_rbf, dst, n_atoms, cfg, p + ".t" + std::to_string(m)));
    return c.tape.concat_cols(per_target);
}

}  // namespace

ForwardResult run_forward(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                          const RootTable& roots) {
    cfg.validate();
    DirectedGraph graph = build_graph(mol, cfg.cutoff());

    auto tape = std::make_shared<Tape>();
    Ctx c{*tape, params, {}};
    c.vars.reserve(params.count());
    for (const auto& t : params.values) c.vars.push_back(tape->leaf(t));

    const int N = mol.size();
    Var X = tape->leaf(mol.positions_tensor());

    std::vector<std::int64_t> src, dst, tkj, tji;
    for (const Edge& e : graph.edges) {
        src.push_back(e.src);
        dst.push_back(e.dst);
    }
    for (const Triplet& tr : graph.triplets) {
        tkj.push_back(tr.kj);
        tji.push_back(tr.ji);
    }

    // Per-edge geometry, differentiable.
    Var evec = tape->sub(tape->gather_rows(X, dst), tape->gather_rows(X, src));  // x_i - x_j
    Var d = tape->sqrt(tape->row_sum(tape->mul(evec, evec)));                    // E x 1
    Var e_rbf = edge_rbf(c, d, cfg);

    std::vector<std::int64_t> zidx;
    for (int zi : mol.z) {
        if (zi > cfg.max_z) throw std::invalid_argument("forward: unknown element Z=" + std::to_string(zi));
        zidx.push_back(zi);
    }
    Var h0 = tape->gather_rows(c.p("atom_emb"), zidx);  // N x F

    Var pred;
    if (cfg.node_mode) {
        Var h = h0;
        pred = tape->col_sum(output_block(c, h, e_rbf, dst, N, cfg, 0));
        for (int b = 0; b < cfg.num_blocks; ++b) {
            const std::string p = "int" + std::to_string(b);
            Var ht = dense_swish(c, h, p + ".src");
            Var gate = tape->matmul(e_rbf, c.p(p + ".W_rbf"));
            Var agg = tape->scatter_add_rows(tape->mul(gate, tape->gather_rows(ht, src)), dst, N);
            Var u = tape->add(dense_swish(c, h, p + ".self"), agg);
            h = tape->add(h, residual_stack(c, u, p, cfg.num_residual));
            pred = tape->add(pred, tape->col_sum(output_block(c, h, e_rbf, dst, N, cfg, b + 1)));
        }
    } else {
        // Per-triplet angles and 2D basis.
        Var a = tape->neg(tape->gather_rows(evec, tkj));  // x_k - x_j
        Var bb = tape->gather_rows(evec, tji);            // x_i - x_j
        Var dkj = tape->gather_rows(d, tkj);
        Var dji = tape->gather_rows(d, tji);
        Var cos_alpha = tape->div(tape->row_sum(tape->mul(a, bb)), tape->mul(dkj, dji));
        Var alpha = tape->acos(tape->clamp(cos_alpha, -1.0 + kCosClamp, 1.0 - kCosClamp));
        Var a_sbf = triplet_sbf(c, dkj, alpha, cfg, roots);

        // Embedding block.
        Var cat = tape->concat_cols({tape->gather_rows(h0, src), tape->gather_rows(h0, dst), e_rbf});
        Var m = dense_swish(c, cat, "embed");
        pred = tape->col_sum(output_block(c, m, e_rbf, dst, N, cfg, 0));

        const std::int64_t E = graph.num_edges();
        for (int b = 0; b < cfg.num_blocks; ++b) {
            const std::string p = "int" + std::to_string(b);
            Var mt = dense_swish(c, m, p + ".src");
            Var gate = tape->matmul(e_rbf, c.p(p + ".W_rbf"));
            Var g = tape->mul(tape->gather_rows(gate, tji), tape->gather_rows(mt, tkj));
            Var s = tape->matmul(a_sbf, c.p(p + ".W_sbf"));
            Var f_int = tape->bilinear(s, c.p(p + ".W_bil"), g);
            Var agg = tape->scatter_add_rows(f_int, tji, E);
            Var u = tape->add(dense_swish(c, m, p + ".self"), agg);
            m = tape->add(m, residual_stack(c, u, p, cfg.num_residual));
            pred = tape->add(pred, tape->col_sum(output_block(c, m, e_rbf, dst, N, cfg, b + 1)));
        }
    }

    ForwardResult res;
    res.tape = tape;
    res.prediction = pred;
    res.positions = X;
    res.param_vars = c.vars;
    res.graph = std::move(graph);
    return res;
}

std::vector<double> forward(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                            const RootTable& roots) {
    return run_forward(mol, params, cfg, roots).prediction.value().data;
}

std::vector<std::array<double, 3>> predict_forces(const Molecule& mol, const ParamSet& params,
                                                  const ModelConfig& cfg, const RootTable& roots) {
    return predict_energy_forces(mol, params, cfg, roots).forces;
}

EnergyForces predict_energy_forces(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                                   const RootTable& roots) {
    check(cfg.num_targets == 1, "predict_forces: requires a scalar energy head (num_targets == 1)");
    ForwardResult fr = run_forward(mol, params, cfg, roots);
    Var grad = fr.tape->gradient(fr.prediction, {fr.positions})[0];
    EnergyForces out;
    out.energy = fr.prediction.scalar();
    out.forces.resize(static_cast<std::size_t>(mol.size()));
    const Tensor& g = grad.value();
    for (int i = 0; i < mol.size(); ++i)
        for (int k = 0; k < 3; ++k) out.forces[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = -g.at(i, k);
    return out;
}

}  // namespace dimenet
