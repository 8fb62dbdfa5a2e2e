#include "dimenet/filters.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace dimenet {

namespace {

std::vector<double> eval_rbf(double d, const ParamSet& params, const ModelConfig& cfg) {
    if (cfg.rbf_mode == RbfMode::Gaussian)
        return gaussian_radial_basis(d, cfg.cutoff(), cfg.n_gaussian, cfg.gamma_effective(),
                                     cfg.basis.envelope_p);
    const Tensor& k = params.get("k_rbf");
    return radial_basis(d, cfg.basis, std::vector<double>(k.data.begin(), k.data.end()));
}

}  // namespace

std::vector<double> filter1(double d, const ParamSet& params, const ModelConfig& cfg, int block) {
    const std::vector<double> rbf = eval_rbf(d, params, cfg);
    const Tensor& w = params.get("int" + std::to_string(block) + ".W_rbf");
    check(static_cast<std::int64_t>(rbf.size()) == w.rows(), "filter1: basis width mismatch");
    std::vector<double> out(static_cast<std::size_t>(w.cols()), 0.0);
    for (std::int64_t n = 0; n < w.rows(); ++n)
        for (std::int64_t f = 0; f < w.cols(); ++f)
            out[static_cast<std::size_t>(f)] += rbf[static_cast<std::size_t>(n)] * w.at(n, f);
    return out;
}

std::vector<double> filter2(double d, double alpha, int slice, const ParamSet& params,
                            const ModelConfig& cfg, const RootTable& roots, int block) {
    check(!cfg.node_mode, "filter2: undefined in node mode");
    BasisConfig bc = cfg.basis;
    bc.n_shbf = cfg.n_shbf_effective();
    const std::vector<double> sbf = spherical_basis_2d(d, alpha, bc, roots);
    const std::string p = "int" + std::to_string(block);
    const Tensor& wsbf = params.get(p + ".W_sbf");
    const Tensor& wbil = params.get(p + ".W_bil");
    check(static_cast<std::int64_t>(sbf.size()) == wsbf.rows(), "filter2: basis width mismatch");
    const std::int64_t B = wbil.shape[0], F1 = wbil.shape[1], F2 = wbil.shape[2];
    check(slice >= 0 && slice < F1, "filter2: slice out of range");
    std::vector<double> s(static_cast<std::size_t>(B), 0.0);
    for (std::int64_t i = 0; i < wsbf.rows(); ++i)
        for (std::int64_t b = 0; b < B; ++b)
            s[static_cast<std::size_t>(b)] += sbf[static_cast<std::size_t>(i)] * wsbf.at(i, b);
    std::vector<double> out(static_cast<std::size_t>(F2), 0.0);
    for (std::int64_t b = 0; b < B; ++b) {
        const double* wrow = &wbil.data[static_cast<std::size_t>((b * F1 + slice) * F2)];
        for (std::int64_t f2 = 0; f2 < F2; ++f2) out[static_cast<std::size_t>(f2)] += s[static_cast<std::size_t>(b)] * wrow[f2];
    }
    return out;
}

FilterGrid export_filter_grid(const ParamSet& params, const ModelConfig& cfg, const RootTable& roots,
                              int slice, int resolution, int num_elements, int block) {
    check(resolution >= 2, "export_filter_grid: resolution must be >= 2");
    const double pi = 3.14159265358979323846;
    FilterGrid grid;
    grid.num_elements = std::min<int>(num_elements, cfg.emb_size);
    for (int i = 1; i <= resolution; ++i) grid.d_axis.push_back(cfg.cutoff() * i / resolution);
    for (int i = 0; i < resolution; ++i) grid.alpha_axis.push_back(pi * i / (resolution - 1.0));
    grid.values.reserve(static_cast<std::size_t>(resolution) * resolution *
                        static_cast<std::size_t>(grid.num_elements));
    for (double d : grid.d_axis)
        for (double a : grid.alpha_axis) {
            const auto v = filter2(d, a, slice, params, cfg, roots, block);
            for (int e = 0; e < grid.num_elements; ++e) grid.values.push_back(v[static_cast<std::size_t>(e)]);
        }
    return grid;
}

void write_filter_grid_csv(const FilterGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_filter_grid_csv: cannot open " + path);
    out << "d,alpha";
    for (int e = 0; e < grid.num_elements; ++e) out << ",element_" << e;
    out << "\n";
    out << std::setprecision(17);
    std::size_t idx = 0;
    for (double d : grid.d_axis)
        for (double a : grid.alpha_axis) {
            out << d << "," << a;
            for (int e = 0; e < grid.num_elements; ++e) out << "," << grid.values[idx++];
            out << "\n";
        }
}

}  // namespace dimenet
