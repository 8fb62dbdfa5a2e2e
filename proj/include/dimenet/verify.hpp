#ifndef DIMENET_VERIFY_HPP
#define DIMENET_VERIFY_HPP

#include <cstdint>
#include <random>

#include "dimenet/model.hpp"

namespace dimenet {

/// Random molecule with n atoms, pairwise distances kept above min_dist.
/// Elements drawn from {H, C, N, O, F}. The box grows with n so the
/// density stays physically plausible.
Molecule random_molecule(std::mt19937_64& rng, int n, double box = 4.0, double min_dist = 0.9);

/// Uniformly random rotation matrix (row-major 3x3).
std::array<double, 9> random_rotation(std::mt19937_64& rng);

Molecule transform(const Molecule& mol, const std::array<double, 9>& rot, const std::array<double, 3>& shift);
Molecule invert(const Molecule& mol);
Molecule permute(const Molecule& mol, const std::vector<int>& perm);

struct InvarianceReport {
    double rotation_translation = 0.0;  // |E(RX+t) - E(X)|
    double permutation = 0.0;
    double inversion = 0.0;
};

InvarianceReport check_invariance(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                                  const RootTable& roots, std::mt19937_64& rng);

struct ForceReport {
    double fd_max_rel_error = 0.0;  // vs central differences
    double net_force = 0.0;         // max |sum_i F_i| component
    double net_torque = 0.0;        // max |sum_i x_i x F_i| component
};

ForceReport check_forces(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                         const RootTable& roots, double h = 1e-4);

struct CutoffReport {
    double max_jump_e = 0.0;   // discontinuity estimate / local scale
    double max_jump_d1 = 0.0;
    double max_jump_d2 = 0.0;
    double beyond_cutoff_spread = 0.0;  // |E(d) - E(d >= c)| max over d >= c
};

/// Sweep a dimer bond length through [c - window, c + window] and estimate
/// discontinuities of the energy and its first two numerical derivatives:
/// extrapolation residuals inside the window plus left/right limit
/// mismatches at the crossing, each relative to that quantity's scale
/// over the window.
CutoffReport check_cutoff_smoothness(const ParamSet& params, const ModelConfig& cfg, const RootTable& roots,
                                     double window = 0.05, double step = 1e-3);

}  // namespace dimenet

#endif
