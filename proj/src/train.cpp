#include "dimenet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace dimenet {

void Dataset::validate() const {
    check(!frames.empty(), "Dataset: empty");
    for (const auto& f : frames) {
        check(static_cast<int>(f.targets.size()) == num_targets, "Dataset: inconsistent target count");
        check(f.forces.has_value() == has_forces, "Dataset: inconsistent force presence");
        if (f.forces) check(f.forces->size() == f.mol.positions.size(), "Dataset: force/atom count mismatch");
    }
}

std::vector<double> target_sigmas(const Dataset& ds) {
    ds.validate();
    const int M = ds.num_targets;
    std::vector<double> mean(static_cast<std::size_t>(M), 0.0), var(static_cast<std::size_t>(M), 0.0);
    for (const auto& f : ds.frames)
        for (int m = 0; m < M; ++m) mean[static_cast<std::size_t>(m)] += f.targets[static_cast<std::size_t>(m)];
    for (auto& v : mean) v /= static_cast<double>(ds.size());
    for (const auto& f : ds.frames)
        for (int m = 0; m < M; ++m) {
            const double d = f.targets[static_cast<std::size_t>(m)] - mean[static_cast<std::size_t>(m)];
            var[static_cast<std::size_t>(m)] += d * d;
        }
    std::vector<double> sigma(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m)
        sigma[static_cast<std::size_t>(m)] = std::sqrt(var[static_cast<std::size_t>(m)] / static_cast<double>(ds.size()));
    return sigma;
}

void TrainConfig::validate() const {
    check(rho >= 0.0, "TrainConfig: rho must be >= 0");
    check(lr > 0.0, "TrainConfig: lr must be > 0");
    check(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    check(ema_decay > 0.0 && ema_decay < 1.0, "TrainConfig: ema_decay must be in (0, 1)");
    check(max_steps >= 1, "TrainConfig: max_steps must be >= 1");
    check(eval_interval >= 1, "TrainConfig: eval_interval must be >= 1");
}

double loss_energy(double pred, double target) { return std::abs(pred - target); }

double loss_md(double pred_energy, double target_energy,
               const std::vector<std::array<double, 3>>& pred_forces,
               const std::vector<std::array<double, 3>>& target_forces, double rho) {
    check(pred_forces.size() == target_forces.size(), "loss_md: force shape mismatch");
    double loss = std::abs(pred_energy - target_energy);
    const std::size_t n = pred_forces.size();
    if (n > 0 && rho != 0.0) {
        double fsum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k)
                fsum += std::abs(pred_forces[i][static_cast<std::size_t>(k)] -
                                 target_forces[i][static_cast<std::size_t>(k)]);
        loss += rho / (3.0 * static_cast<double>(n)) * fsum;
    }
    return loss;
}

double lr_schedule(std::int64_t step, const TrainConfig& cfg) {
    const double warm = cfg.warmup_steps > 0
                            ? std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.warmup_steps))
                            : 1.0;
    const double decay = std::pow(cfg.decay_rate, static_cast<double>(step) / cfg.decay_steps);
    return cfg.lr * warm * decay;
}

AmsGradState AmsGradState::zeros_like(const std::vector<Tensor>& params) {
    AmsGradState s;
    for (const auto& p : params) {
        Tensor z = p;
        std::fill(z.data.begin(), z.data.end(), 0.0);
        s.m.push_back(z);
        s.v.push_back(z);
        s.vhat.push_back(std::move(z));
    }
    return s;
}

void amsgrad_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AmsGradState& state,
                  double lr_t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    check(params.size() == grads.size() && params.size() == state.m.size(), "amsgrad_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        check(params[i].same_shape(grads[i]), "amsgrad_step: grad shape mismatch");
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        auto& m = state.m[i].data;
        auto& v = state.v[i].data;
        auto& vh = state.vhat[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            vh[k] = std::max(vh[k], v[k]);
            p[k] -= lr_t * m[k] / (std::sqrt(vh[k]) + eps);
        }
    }
}

void ema_update(std::vector<Tensor>& shadow, const std::vector<Tensor>& params, double decay) {
    check(shadow.size() == params.size(), "ema_update: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        check(shadow[i].same_shape(params[i]), "ema_update: shape mismatch");
        auto& s = shadow[i].data;
        const auto& p = params[i].data;
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = decay * s[k] + (1.0 - decay) * p[k];
    }
}

namespace {

/// Differentiable per-frame loss on the frame's own tape; returns the
/// parameter gradient values. Uses a second backward pass through the
/// force gradient when the force term is active.
double frame_loss_and_grads(const Frame& frame, const ParamSet& params, const ModelConfig& mcfg,
                            const RootTable& roots, double rho, std::vector<Tensor>& grad_accum,
                            double scale) {
    ForwardResult fr = run_forward(frame.mol, params, mcfg, roots);
    Tape& t = *fr.tape;

    Var target = t.leaf([&] {
        Tensor tt(1, mcfg.num_targets);
        for (int m = 0; m < mcfg.num_targets; ++m) tt.at(0, m) = frame.targets[static_cast<std::size_t>(m)];
        return tt;
    }());
    Var loss = t.sum_all(t.abs(t.sub(fr.prediction, target)));

    const bool with_forces = rho > 0.0 && frame.forces.has_value();
    if (with_forces) {
        check(mcfg.num_targets == 1, "training with forces requires num_targets == 1");
        Var grad_x = t.gradient(fr.prediction, {fr.positions})[0];
        const int n = frame.mol.size();
        Tensor ft(n, 3);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k)
                ft.at(i, k) = (*frame.forces)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        // pred F = -grad, so |predF - F_hat| = |grad + F_hat|
        Var fdiff = t.abs(t.add(grad_x, t.leaf(std::move(ft))));
        loss = t.add(loss, t.scale(t.sum_all(fdiff), rho / (3.0 * n)));
    }

    std::vector<Var> grads = t.gradient(loss, fr.param_vars);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const auto& g = grads[i].value().data;
        auto& acc = grad_accum[i].data;
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += scale * g[k];
    }
    return loss.scalar();
}

}  // namespace

double evaluate_loss(const Dataset& ds, const ParamSet& params, const ModelConfig& mcfg,
                     const RootTable& roots, double rho) {
    check(!ds.frames.empty(), "evaluate_loss: empty dataset");
    double total = 0.0;
    for (const auto& f : ds.frames) {
        if (rho > 0.0 && f.forces) {
            EnergyForces ef = predict_energy_forces(f.mol, params, mcfg, roots);
            total += loss_md(ef.energy, f.targets.at(0), ef.forces, *f.forces, rho);
        } else {
            const auto pred = forward(f.mol, params, mcfg, roots);
            for (int m = 0; m < mcfg.num_targets; ++m)
                total += std::abs(pred[static_cast<std::size_t>(m)] - f.targets[static_cast<std::size_t>(m)]);
        }
    }
    return total / static_cast<double>(ds.size());
}

MaePair evaluate_mae(const Dataset& ds, const ParamSet& params, const ModelConfig& mcfg,
                     const RootTable& roots) {
    check(!ds.frames.empty(), "evaluate_mae: empty dataset");
    MaePair out;
    double fcomp = 0.0;
    for (const auto& f : ds.frames) {
        if (ds.has_forces) {
            EnergyForces ef = predict_energy_forces(f.mol, params, mcfg, roots);
            out.energy += std::abs(ef.energy - f.targets.at(0));
            for (std::size_t i = 0; i < ef.forces.size(); ++i)
                for (int k = 0; k < 3; ++k)
                    out.force += std::abs(ef.forces[i][static_cast<std::size_t>(k)] -
                                          (*f.forces)[i][static_cast<std::size_t>(k)]);
            fcomp += 3.0 * static_cast<double>(ef.forces.size());
        } else {
            const auto pred = forward(f.mol, params, mcfg, roots);
            out.energy += std::abs(pred.at(0) - f.targets.at(0));
        }
    }
    out.energy /= static_cast<double>(ds.size());
    if (fcomp > 0.0) out.force /= fcomp;
    return out;
}

TrainResult train_loop(const Dataset& train, const Dataset& val, ParamSet params, const ModelConfig& mcfg,
                       const TrainConfig& tcfg, std::ostream* log) {
    train.validate();
    val.validate();
    tcfg.validate();
    mcfg.validate();
    const RootTable roots = make_roots(mcfg);

    std::mt19937_64 rng(tcfg.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    AmsGradState opt = AmsGradState::zeros_like(params.values);
    std::vector<Tensor> ema = params.values;

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    ParamSet best_params = params;
    std::vector<Tensor> best_ema = ema;
    std::int64_t best_step = 0;
    int evals_since_best = 0;

    double loss_accum = 0.0;
    std::int64_t loss_count = 0;
    std::int64_t step = 0;

    std::vector<Tensor> grad(params.values.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = params.values[i];
    }

    for (step = 1; step <= tcfg.max_steps; ++step) {
        for (auto& g : grad) std::fill(g.data.begin(), g.data.end(), 0.0);
        double batch_loss = 0.0;
        const int bs = std::min<std::int64_t>(tcfg.batch_size, static_cast<std::int64_t>(train.size()));
        for (int b = 0; b < bs; ++b) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const Frame& f = train.frames[order[cursor++]];
            batch_loss += frame_loss_and_grads(f, params, mcfg, roots, train.has_forces ? tcfg.rho : 0.0,
                                               grad, 1.0 / bs);
        }
        batch_loss /= bs;
        if (!std::isfinite(batch_loss))
            throw std::runtime_error("train_loop: non-finite loss at step " + std::to_string(step));

        const double lr_t = lr_schedule(step, tcfg);
        amsgrad_step(params.values, grad, opt, lr_t);
        ema_update(ema, params.values, tcfg.ema_decay);
        loss_accum += batch_loss;
        ++loss_count;

        if (step % tcfg.eval_interval == 0 || step == tcfg.max_steps) {
            ParamSet ema_params = params;
            ema_params.values = ema;
            const double rho_eval = val.has_forces ? tcfg.rho : 0.0;
            EvalRecord rec;
            rec.step = step;
            rec.lr = lr_t;
            rec.train_loss = loss_accum / static_cast<double>(loss_count);
            rec.val_loss_ema = evaluate_loss(val, ema_params, mcfg, roots, rho_eval);
            rec.val_loss_raw = evaluate_loss(val, params, mcfg, roots, rho_eval);
            result.evals.push_back(rec);
            loss_accum = 0.0;
            loss_count = 0;
            if (log)
                (*log) << rec.step << " " << rec.lr << " " << rec.train_loss << " " << rec.val_loss_ema
                       << "\n";
            if (rec.val_loss_ema < best_val) {
                best_val = rec.val_loss_ema;
                best_params = ema_params;
                best_ema = ema;
                best_step = step;
                evals_since_best = 0;
            } else if (++evals_since_best >= tcfg.patience) {
                break;
            }
        }
    }

    result.final_params = params;
    result.final_ema = ema;
    Checkpoint& ck = result.checkpoint;
    ck.config = mcfg;
    ck.params = std::move(best_params);
    ck.has_ema = true;
    ck.ema = std::move(best_ema);
    ck.has_opt = true;
    ck.opt = std::move(opt);
    ck.seed = tcfg.seed;
    ck.step = best_step;
    return result;
}

}  // namespace dimenet
