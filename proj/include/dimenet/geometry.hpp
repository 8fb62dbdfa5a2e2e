#ifndef DIMENET_GEOMETRY_HPP
#define DIMENET_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "dimenet/tensor.hpp"

namespace dimenet {

/// Atomic numbers plus 3D coordinates in Angstrom. The sole model input.
struct Molecule {
    std::vector<int> z;
    std::vector<std::array<double, 3>> positions;

    int size() const { return static_cast<int>(z.size()); }
    void validate() const;

    /// Positions as an Nx3 tensor (for the differentiation engine).
    Tensor positions_tensor() const;
    static std::vector<std::array<double, 3>> positions_from_tensor(const Tensor& t);
};

/// One directed edge j -> i.
struct Edge {
    int src = 0;  // j
    int dst = 0;  // i
};

/// Angle triplet: edge kj feeding into edge ji at shared atom j, k != i.
struct Triplet {
    std::int64_t kj = 0;  // edge index of (k -> j)
    std::int64_t ji = 0;  // edge index of (j -> i)
};

/// Cutoff-filtered directed molecular graph with distances and angle
/// triplets. Edges sorted by (dst, src), triplets by (ji, kj).
struct DirectedGraph {
    int num_atoms = 0;
    double cutoff = 0.0;
    std::vector<Edge> edges;
    std::vector<double> dist;
    std::vector<Triplet> triplets;
    std::vector<double> angle;  // alpha_(kj,ji) in [0, pi]

    std::int64_t num_edges() const { return static_cast<std::int64_t>(edges.size()); }
    std::int64_t num_triplets() const { return static_cast<std::int64_t>(triplets.size()); }
};

/// Angle at x_j between bond vectors to x_k and x_i, clamped arccos,
/// result in [0, pi].
double compute_angle(const std::array<double, 3>& xk, const std::array<double, 3>& xj,
                     const std::array<double, 3>& xi);

/// Directed graph with all edges of length <= cutoff and all angle
/// triplets. Throws on degenerate geometry (pair distance <= 1e-8 A).
DirectedGraph build_graph(const Molecule& mol, double cutoff);

}  // namespace dimenet

#endif
