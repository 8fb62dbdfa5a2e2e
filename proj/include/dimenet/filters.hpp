#ifndef DIMENET_FILTERS_HPP
#define DIMENET_FILTERS_HPP

#include <string>
#include <vector>

#include "dimenet/model.hpp"

namespace dimenet {

/// Separable spatial filters of the interaction function, evaluated on a
/// (d, alpha) grid for export/inspection.
struct FilterGrid {
    std::vector<double> d_axis;      // in (0, c], strictly increasing
    std::vector<double> alpha_axis;  // in [0, pi], strictly increasing
    int num_elements = 0;
    // values[(di * |alpha_axis| + ai) * num_elements + e]
    std::vector<double> values;
};

/// Radial gating vector of interaction block `block`: (W_rbf^T e_RBF(d)),
/// length F. Matches the model's spatial pathway exactly.
std::vector<double> filter1(double d, const ParamSet& params, const ModelConfig& cfg, int block);

/// Angular-radial filter: (W_sbf^T a_SBF(d, alpha)) contracted with
/// bilinear tensor slice n, length F.
std::vector<double> filter2(double d, double alpha, int slice, const ParamSet& params,
                            const ModelConfig& cfg, const RootTable& roots, int block);

/// filter2 evaluated on a regular resolution x resolution grid over
/// (0, c] x [0, pi], keeping the first `num_elements` vector entries.
FilterGrid export_filter_grid(const ParamSet& params, const ModelConfig& cfg, const RootTable& roots,
                              int slice, int resolution, int num_elements = 15, int block = 0);

/// CSV with header "d,alpha,element_0..element_{k-1}".
void write_filter_grid_csv(const FilterGrid& grid, const std::string& path);

}  // namespace dimenet

#endif
