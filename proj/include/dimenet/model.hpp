#ifndef DIMENET_MODEL_HPP
#define DIMENET_MODEL_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dimenet/bessel.hpp"
#include "dimenet/geometry.hpp"
#include "dimenet/tape.hpp"
#include "dimenet/tensor.hpp"

namespace dimenet {

enum class RbfMode { Bessel, Gaussian };

struct ModelConfig {
    int emb_size = 128;       // F
    int num_blocks = 6;       // L interaction blocks
    int n_bilinear = 8;
    int num_targets = 1;      // T
    BasisConfig basis;        // cutoff lives here
    bool shared_output_blocks = true;
    int num_residual = 2;
    int num_output_dense = 3;
    RbfMode rbf_mode = RbfMode::Bessel;
    int n_gaussian = 64;       // RBF count in Gaussian ablation mode
    double gaussian_gamma = 0.0;  // <= 0: derived so neighbors overlap at half peak
    bool use_angles = true;    // false: N_SHBF = 1 ablation
    bool node_mode = false;    // node-embedding ablation (no messages, no angles)
    int max_z = 94;

    double cutoff() const { return basis.cutoff; }
    int n_rbf_effective() const { return rbf_mode == RbfMode::Gaussian ? n_gaussian : basis.n_rbf; }
    int n_shbf_effective() const { return use_angles ? basis.n_shbf : 1; }
    double gamma_effective() const;
    void validate() const;
};

/// All learnable tensors, in a fixed, seed-reproducible order.
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Tensor> values;

    int add(const std::string& name, Tensor t);
    int index(const std::string& name) const;  // -1 if absent
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    std::size_t count() const { return values.size(); }
    std::int64_t total_size() const;
};

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Root table sized for the config (shared, computed once).
RootTable make_roots(const ModelConfig& cfg);

/// A completed differentiable forward pass.
struct ForwardResult {
    std::shared_ptr<Tape> tape;
    Var prediction;            // 1 x T
    Var positions;             // N x 3 leaf
    std::vector<Var> param_vars;  // aligned with ParamSet order
    DirectedGraph graph;
};

ForwardResult run_forward(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                          const RootTable& roots);

/// Prediction values only (length T).
std::vector<double> forward(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                            const RootTable& roots);

/// Forces as the negative position gradient of the scalar energy head.
/// Requires num_targets == 1.
std::vector<std::array<double, 3>> predict_forces(const Molecule& mol, const ParamSet& params,
                                                  const ModelConfig& cfg, const RootTable& roots);

/// Energy and forces from one traced evaluation.
struct EnergyForces {
    double energy = 0.0;
    std::vector<std::array<double, 3>> forces;
};
EnergyForces predict_energy_forces(const Molecule& mol, const ParamSet& params, const ModelConfig& cfg,
                                   const RootTable& roots);

}  // namespace dimenet

#endif
