#ifndef DIMENET_DATASET_HPP
#define DIMENET_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "dimenet/geometry.hpp"

namespace dimenet {

struct Frame {
    Molecule mol;
    std::vector<double> targets;  // length T
    std::optional<std::vector<std::array<double, 3>>> forces;
};

/// Energies in eV, coordinates in Angstrom, forces in eV/A.
struct Dataset {
    std::vector<Frame> frames;
    int num_targets = 1;
    bool has_forces = false;
    std::string units = "eV";

    std::size_t size() const { return frames.size(); }
    void validate() const;
};

/// Per-target standard deviation of the ground truth (for std. MAE /
/// logMAE reporting).
std::vector<double> target_sigmas(const Dataset& ds);

}  // namespace dimenet

#endif
