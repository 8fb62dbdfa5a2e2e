#ifndef DIMENET_TRAIN_HPP
#define DIMENET_TRAIN_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dimenet/dataset.hpp"
#include "dimenet/model.hpp"

namespace dimenet {

struct TrainConfig {
    double rho = 100.0;  // force-loss weight; 0 disables the force term
    double lr = 1e-3;
    int batch_size = 32;
    std::int64_t warmup_steps = 3000;
    double decay_rate = 0.1;
    double decay_steps = 2000000.0;
    double ema_decay = 0.999;
    std::int64_t max_steps = 100000;
    int patience = 10;          // evaluations without improvement before stopping
    std::int64_t eval_interval = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Energy term of Eq.-2-style losses: plain absolute error.
double loss_energy(double pred, double target);

/// Joint energy + force loss: |dE| + rho/(3N) sum |dF|. pred_forces are
/// already the negative energy gradient.
double loss_md(double pred_energy, double target_energy,
               const std::vector<std::array<double, 3>>& pred_forces,
               const std::vector<std::array<double, 3>>& target_forces, double rho);

/// lr * min(1, step/warmup) * decay_rate^(step/decay_steps); continuous in step.
double lr_schedule(std::int64_t step, const TrainConfig& cfg);

struct AmsGradState {
    std::vector<Tensor> m, v, vhat;

    static AmsGradState zeros_like(const std::vector<Tensor>& params);
};

/// One AMSGrad update in place. beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
void amsgrad_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AmsGradState& state,
                  double lr_t);

/// shadow <- decay * shadow + (1 - decay) * params, elementwise.
void ema_update(std::vector<Tensor>& shadow, const std::vector<Tensor>& params, double decay);

struct Checkpoint {
    int version = 1;
    ModelConfig config;
    ParamSet params;
    bool has_ema = false;
    std::vector<Tensor> ema;  // aligned with params order
    bool has_opt = false;
    AmsGradState opt;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
};

struct EvalRecord {
    std::int64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;  // running mean since the previous evaluation
    double val_loss_ema = 0.0;
    double val_loss_raw = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;  // params hold the best EMA weights; opt/ema reflect the final step
    std::vector<EvalRecord> evals;
    ParamSet final_params;      // raw weights at the last step
    std::vector<Tensor> final_ema;  // EMA shadow at the last step
};

/// Mini-batch AMSGrad training with warmup/decay schedule, EMA weights for
/// validation, and early stopping. Deterministic for a fixed seed.
/// Throws on an empty dataset or a non-finite loss.
TrainResult train_loop(const Dataset& train, const Dataset& val, ParamSet params, const ModelConfig& mcfg,
                       const TrainConfig& tcfg, std::ostream* log = nullptr);

/// Mean loss of a dataset under the given weights (MD loss when the
/// dataset has forces and rho > 0, energy MAE otherwise).
double evaluate_loss(const Dataset& ds, const ParamSet& params, const ModelConfig& mcfg,
                     const RootTable& roots, double rho);

/// Energy and force MAEs of a dataset under the given weights.
struct MaePair {
    double energy = 0.0;
    double force = 0.0;
};
MaePair evaluate_mae(const Dataset& ds, const ParamSet& params, const ModelConfig& mcfg,
                     const RootTable& roots);

}  // namespace dimenet

#endif
