#include "dimenet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dimenet {

namespace {
constexpr double kMinPairDistance = 1e-8;
}

void Molecule::validate() const {
    check(!z.empty(), "Molecule: at least one atom required");
    check(z.size() == positions.size(), "Molecule: z/position count mismatch");
    for (int zi : z) check(zi >= 1, "Molecule: atomic numbers must be >= 1");
    for (const auto& p : positions)
        for (double v : p) check(std::isfinite(v), "Molecule: coordinates must be finite");
    for (std::size_t a = 0; a < positions.size(); ++a)
        for (std::size_t b = a + 1; b < positions.size(); ++b) {
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double dd = positions[a][static_cast<std::size_t>(k)] - positions[b][static_cast<std::size_t>(k)];
                d2 += dd * dd;
            }
            if (d2 <= kMinPairDistance * kMinPairDistance)
                throw std::invalid_argument("Molecule: degenerate atom pair (distance <= 1e-8 A)");
        }
}

Tensor Molecule::positions_tensor() const {
    Tensor t(static_cast<std::int64_t>(positions.size()), 3);
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (int k = 0; k < 3; ++k) t.at(static_cast<std::int64_t>(i), k) = positions[i][static_cast<std::size_t>(k)];
    return t;
}

std::vector<std::array<double, 3>> Molecule::positions_from_tensor(const Tensor& t) {
    check(t.rank() == 2 && t.cols() == 3, "positions_from_tensor: expects Nx3");
    std::vector<std::array<double, 3>> out(static_cast<std::size_t>(t.rows()));
    for (std::int64_t i = 0; i < t.rows(); ++i)
        for (int k = 0; k < 3; ++k) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = t.at(i, k);
    return out;
}

double compute_angle(const std::array<double, 3>& xk, const std::array<double, 3>& xj,
                     const std::array<double, 3>& xi) {
    double a[3], b[3], na = 0.0, nb = 0.0, dot = 0.0;
    for (int m = 0; m < 3; ++m) {
        a[m] = xk[static_cast<std::size_t>(m)] - xj[static_cast<std::size_t>(m)];
        b[m] = xi[static_cast<std::size_t>(m)] - xj[static_cast<std::size_t>(m)];
        na += a[m] * a[m];
        nb += b[m] * b[m];
        dot += a[m] * b[m];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na <= kMinPairDistance || nb <= kMinPairDistance)
        throw std::invalid_argument("compute_angle: degenerate geometry (zero-length bond vector)");
    double c = dot / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

DirectedGraph build_graph(const Molecule& mol, double cutoff) {
    mol.validate();
    check(cutoff > 0.0, "build_graph: cutoff must be > 0");

    const int n = mol.size();
    DirectedGraph g;
    g.num_atoms = n;
    g.cutoff = cutoff;

    // O(N^2) pairwise scan; fine at desk scale.
    // Edges sorted by (dst, src) by construction.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double d2 = 0.0;
            for (int m = 0; m < 3; ++m) {
                const double dd = mol.positions[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] -
                                  mol.positions[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)];
                d2 += dd * dd;
            }
            const double d = std::sqrt(d2);
            if (d <= cutoff) {
                g.edges.push_back(Edge{j, i});
                g.dist.push_back(d);
            }
        }
    }

    // Incoming edges per atom, in edge order (edges are (dst, src) sorted,
    // so incoming edges of each atom form a contiguous, sorted run).
    std::vector<std::vector<std::int64_t>> incoming(static_cast<std::size_t>(n));
    for (std::int64_t e = 0; e < g.num_edges(); ++e)
        incoming[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(e)].dst)].push_back(e);

    // Triplets (kj, ji): for each edge ji, every edge into j except the
    // reverse edge i -> j. Sorted by (ji, kj).
    for (std::int64_t ji = 0; ji < g.num_edges(); ++ji) {
        const Edge e = g.edges[static_cast<std::size_t>(ji)];
        for (std::int64_t kj : incoming[static_cast<std::size_t>(e.src)]) {
            const Edge f = g.edges[static_cast<std::size_t>(kj)];
            if (f.src == e.dst) continue;  // k == i
            g.triplets.push_back(Triplet{kj, ji});
            g.angle.push_back(compute_angle(mol.positions[static_cast<std::size_t>(f.src)],
                                            mol.positions[static_cast<std::size_t>(e.src)],
                                            mol.positions[static_cast<std::size_t>(e.dst)]));
        }
    }
    return g;
}

}  // namespace dimenet
