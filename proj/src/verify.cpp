#include "dimenet/verify.hpp"

#include <algorithm>
#include <cmath>

namespace dimenet {

Molecule random_molecule(std::mt19937_64& rng, int n, double box, double min_dist) {
    static const int kElements[] = {1, 6, 7, 8, 9};
    // Keep the density liquid-like as n grows; cramped geometries have
    // enormous curvature and defeat finite-difference validation.
    box = std::max(box, 2.5 * std::cbrt(static_cast<double>(n)));
    std::uniform_real_distribution<double> pos(-box / 2.0, box / 2.0);
    std::uniform_int_distribution<int> elem(0, 4);
    Molecule mol;
    for (int i = 0; i < n; ++i) {
        mol.z.push_back(kElements[elem(rng)]);
        for (int attempt = 0;; ++attempt) {
            std::array<double, 3> p{pos(rng), pos(rng), pos(rng)};
            bool ok = true;
            for (const auto& q : mol.positions) {
                double d2 = 0.0;
                for (int k = 0; k < 3; ++k) d2 += (p[static_cast<std::size_t>(k)] - q[static_cast<std::size_t>(k)]) *
                                                  (p[static_cast<std::size_t>(k)] - q[static_cast<std::size_t>(k)]);
                if (d2 < min_dist * min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                mol.positions.push_back(p);
                break;
            }
            check(attempt < 10000, "random_molecule: packing failed; lower n or raise box");
        }
    }
    return mol;
}

std::array<double, 9> random_rotation(std::mt19937_64& rng) {
    // Rotation from a random unit quaternion.
    std::normal_distribution<double> g(0.0, 1.0);
    double q[4] = {g(rng), g(rng), g(rng), g(rng)};
    double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (double& v : q) v /= norm;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

Molecule transform(const Molecule& mol, const std::array<double, 9>& rot, const std::array<double, 3>& shift) {
    Molecule out = mol;
    for (auto& p : out.positions) {
        const std::array<double, 3> q = p;
        for (int r = 0; r < 3; ++r)
            p[static_cast<std::size_t>(r)] = rot[static_cast<std::size_t>(3 * r)] * q[0] +
                                             rot[static_cast<std::size_t>(3 * r + 1)] * q[1] +
                                             rot[static_cast<std::size_t>(3 * r + 2)] * q[2] +
                                             shift[static_cast<std::size_t>(r)];
    }
    return out;
}

Molecule invert(const Molecule& mol) {
    Molecule out = mol;
    for (auto& p : out.positions)
        for (auto& v : p) v = -v;
    return out;
}

Molecule permute(const Molecule& mol, const std::vector<int>& perm) {
    Molecule out;
    for (int i : perm) {
        out.z.push_back(mol.z.at(static_cast<std::size_t>(i)));
        out.positions.push_back(mol.positions.at(static_cast<std::size_t>(i)));
    }
    return out;
}

InvarianceReport check_invariance(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                                  const RootTable& roots, std::mt19937_64& rng) {
    const double e0 = forward(mol, params, cfg, roots).at(0);
    InvarianceReport rep;

    std::uniform_real_distribution<double> sh(-10.0, 10.0);
    const auto rot = random_rotation(rng);
    const std::array<double, 3> shift{sh(rng), sh(rng), sh(rng)};
    rep.rotation_translation = std::abs(forward(transform(mol, rot, shift), params, cfg, roots).at(0) - e0);

    std::vector<int> perm(static_cast<std::size_t>(mol.size()));
    for (int i = 0; i < mol.size(); ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    rep.permutation = std::abs(forward(permute(mol, perm), params, cfg, roots).at(0) - e0);

    rep.inversion = std::abs(forward(invert(mol), params, cfg, roots).at(0) - e0);
    return rep;
}

ForceReport check_forces(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                         const RootTable& roots, double h) {
    ForceReport rep;
    EnergyForces ef = predict_energy_forces(mol, params, cfg, roots);

    Tensor grad(mol.size(), 3);
    for (int i = 0; i < mol.size(); ++i)
        for (int k = 0; k < 3; ++k) grad.at(i, k) = -ef.forces[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];

    auto energy_of = [&](const Tensor& x) {
        Molecule m = mol;
        m.positions = Molecule::positions_from_tensor(x);
        return forward(m, params, cfg, roots).at(0);
    };
    rep.fd_max_rel_error = finite_difference_check(energy_of, mol.positions_tensor(), grad, h);

    double net[3] = {0, 0, 0}, torque[3] = {0, 0, 0};
    for (int i = 0; i < mol.size(); ++i) {
        const auto& f = ef.forces[static_cast<std::size_t>(i)];
        const auto& x = mol.positions[static_cast<std::size_t>(i)];
        for (int k = 0; k < 3; ++k) net[k] += f[static_cast<std::size_t>(k)];
        torque[0] += x[1] * f[2] - x[2] * f[1];
        torque[1] += x[2] * f[0] - x[0] * f[2];
        torque[2] += x[0] * f[1] - x[1] * f[0];
    }
    for (int k = 0; k < 3; ++k) {
        rep.net_force = std::max(rep.net_force, std::abs(net[k]));
        rep.net_torque = std::max(rep.net_torque, std::abs(torque[k]));
    }
    return rep;
}

CutoffReport check_cutoff_smoothness(const ParamSet& params, const ModelConfig& cfg, const RootTable& roots,
                                     double window, double step) {
    const double c = cfg.cutoff();
    auto energy_at = [&](double d) {
        Molecule m;
        m.z = {6, 6};
        m.positions = {{0, 0, 0}, {d, 0, 0}};
        return forward(m, params, cfg, roots).at(0);
    };

    const double h = step;
    // Left branch samples, d = c - k*h strictly up to the cutoff.
    const auto m = static_cast<std::size_t>(std::llround(window / h));
    std::vector<double> es(m + 1);  // es[k] = E(c - k*h), es[0] = E(c)
    for (std::size_t k = 0; k <= m; ++k) es[k] = energy_at(c - static_cast<double>(k) * h);
    const double e_const = energy_at(c + h);

    std::vector<double> d1(m + 1, 0.0), d2(m + 1, 0.0);
    for (std::size_t k = 1; k < m; ++k) {
        d1[k] = (es[k - 1] - es[k + 1]) / (2.0 * h);
        d2[k] = (es[k - 1] - 2.0 * es[k] + es[k + 1]) / (h * h);
    }

    auto scale_of = [](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) s = std::max(s, std::abs(v[i]));
        return std::max(s, 1e-12);
    };
    // Residual of a degree-4 extrapolation: ~h^5 v''''' for a smooth
    // series, O(jump) across a discontinuity.
    auto extrap_scan = [](const std::vector<double>& v, std::size_t lo, std::size_t hi, double scale) {
        double worst = 0.0;
        for (std::size_t i = lo + 5; i <= hi; ++i) {
            const double pred = 5 * v[i - 1] - 10 * v[i - 2] + 10 * v[i - 3] - 5 * v[i - 4] + v[i - 5];
            worst = std::max(worst, std::abs(v[i] - pred) / scale);
        }
        return worst;
    };

    CutoffReport rep;
    const double s0 = scale_of(es, 0, m);
    const double s1 = scale_of(d1, 1, m - 1);
    const double s2 = scale_of(d2, 1, m - 1);
    rep.max_jump_e = extrap_scan(es, 0, m, s0);
    rep.max_jump_d1 = extrap_scan(d1, 1, m - 1, s1);
    rep.max_jump_d2 = extrap_scan(d2, 1, m - 1, s2);

    // Limits at the crossing: the right branch is constant, so E, E', E''
    // must all meet it. One-sided stencils at d = c over the left branch.
    rep.max_jump_e = std::max(rep.max_jump_e, std::abs(es[0] - e_const) / s0);
    const double d1_left = (25 * es[0] - 48 * es[1] + 36 * es[2] - 16 * es[3] + 3 * es[4]) / (12 * h);
    rep.max_jump_d1 = std::max(rep.max_jump_d1, std::abs(d1_left) / s1);
    const double d2_left = (35 * es[0] - 104 * es[1] + 114 * es[2] - 56 * es[3] + 11 * es[4]) / (12 * h * h);
    rep.max_jump_d2 = std::max(rep.max_jump_d2, std::abs(d2_left) / s2);

    // Beyond the cutoff the dimer has no edges; energy must be exactly flat.
    for (std::size_t k = 0; k <= m; ++k) {
        const double e = energy_at(c + static_cast<double>(k) * h + h);
        rep.beyond_cutoff_spread = std::max(rep.beyond_cutoff_spread, std::abs(e - e_const));
    }
    rep.beyond_cutoff_spread = std::max(rep.beyond_cutoff_spread, std::abs(energy_at(c + 2.0) - e_const));
    return rep;
}

}  // namespace dimenet
