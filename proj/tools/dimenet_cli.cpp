// Command-line front end: training, inference, verification, and exports.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dimenet/filters.hpp"
#include "dimenet/io.hpp"
#include "dimenet/train.hpp"
#include "dimenet/verify.hpp"

namespace {

using namespace dimenet;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    check(out.good(), "cannot open output file: " + path);
    return out;
}

// Frames past the split boundary become the validation set.
void split_dataset(const Dataset& all, double val_fraction, std::uint64_t seed, Dataset& train, Dataset& val) {
    train = all;
    val = all;
    train.frames.clear();
    val.frames.clear();
    std::vector<std::size_t> order(all.frames.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(all.frames.size())));
    if (val_fraction > 0.0 && n_val == 0 && all.frames.size() > 1) n_val = 1;
    check(n_val < all.frames.size(), "val_fraction leaves no training frames");
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < all.frames.size() - n_val ? train : val).frames.push_back(all.frames[order[i]]);
}

int cmd_train(const std::string& config_path, std::string out_path, const std::string& log_path,
              std::int64_t max_steps_override, std::int64_t seed_override) {
    if (out_path.empty()) out_path = "model.ckpt";
    RunConfig rc = parse_run_config(config_path);
    if (max_steps_override >= 0) rc.train.max_steps = max_steps_override;
    if (seed_override >= 0) rc.train.seed = static_cast<std::uint64_t>(seed_override);
    check(!rc.train_file.empty(), "config must set train_file");

    Dataset train_ds, val_ds;
    if (rc.val_file.empty()) {
        Dataset all = parse_xyz(rc.train_file, rc.energy_scale);
        split_dataset(all, rc.val_fraction, rc.train.seed, train_ds, val_ds);
    } else {
        train_ds = parse_xyz(rc.train_file, rc.energy_scale);
        val_ds = parse_xyz(rc.val_file, rc.energy_scale);
    }
    std::cout << "train frames: " << train_ds.frames.size() << ", val frames: " << val_ds.frames.size()
              << ", forces: " << (train_ds.has_forces ? "yes" : "no") << "\n";

    ParamSet params = init_params(rc.model, rc.train.seed);
    std::ofstream log_file;
    std::ostream* log = &std::cout;
    if (!log_path.empty()) {
        log_file = open_out(log_path);
        log = &log_file;
    }
    TrainResult res = train_loop(train_ds, val_ds, std::move(params), rc.model, rc.train, log);
    save_checkpoint(out_path, res.checkpoint);
    std::cout << "saved checkpoint: " << out_path << " (step " << res.checkpoint.step << ")\n";

    RootTable roots = make_roots(rc.model);
    MaePair mae = evaluate_mae(val_ds.frames.empty() ? train_ds : val_ds, res.checkpoint.params, rc.model, roots);
    std::cout << "energy MAE: " << fmt(mae.energy);
    if (train_ds.has_forces) std::cout << ", force MAE: " << fmt(mae.force);
    std::cout << "\n";
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& xyz_path, const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    Dataset ds = parse_xyz(xyz_path);
    RootTable roots = make_roots(ck.config);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    *out << "frame";
    for (int t = 0; t < ck.config.num_targets; ++t) *out << ",pred_" << t;
    *out << "\n";
    for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        std::vector<double> pred = forward(ds.frames[f].mol, ck.params, ck.config, roots);
        *out << f;
        for (double v : pred) *out << "," << fmt(v);
        *out << "\n";
    }
    return 0;
}

int cmd_forces(const std::string& ckpt_path, const std::string& xyz_path, const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    check(ck.config.num_targets == 1, "forces need a single-target (energy) model");
    Dataset ds = parse_xyz(xyz_path);
    RootTable roots = make_roots(ck.config);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    *out << "frame,atom,element,fx,fy,fz\n";
    for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        const Molecule& mol = ds.frames[f].mol;
        auto forces = predict_forces(mol, ck.params, ck.config, roots);
        for (int i = 0; i < mol.size(); ++i)
            *out << f << "," << i << "," << element_symbol(mol.z[static_cast<std::size_t>(i)]) << ","
                 << fmt(forces[static_cast<std::size_t>(i)][0]) << "," << fmt(forces[static_cast<std::size_t>(i)][1])
                 << "," << fmt(forces[static_cast<std::size_t>(i)][2]) << "\n";
    }
    return 0;
}

int cmd_check(std::uint64_t seed, int molecules, const std::string& xyz_path, const std::string& ckpt_path,
              bool full_size) {
    ModelConfig cfg;
    ParamSet params;
    if (!ckpt_path.empty()) {
        Checkpoint ck = load_checkpoint(ckpt_path);
        cfg = ck.config;
        params = ck.params;
    } else {
        // Small random model: the properties under test hold at any size.
        if (!full_size) {
            cfg.emb_size = 16;
            cfg.num_blocks = 2;
            cfg.n_bilinear = 4;
            cfg.basis.n_rbf = 4;
            cfg.basis.n_srbf = 3;
            cfg.basis.n_shbf = 3;
        }
        params = init_params(cfg, seed);
    }
    check(cfg.num_targets == 1, "check needs a single-target model");
    RootTable roots = make_roots(cfg);
    std::mt19937_64 rng(seed);

    std::vector<Molecule> mols;
    if (!xyz_path.empty()) {
        Dataset ds = parse_xyz(xyz_path);
        for (const auto& fr : ds.frames) mols.push_back(fr.mol);
    } else {
        std::uniform_int_distribution<int> nd(3, 20);
        for (int i = 0; i < molecules; ++i) mols.push_back(random_molecule(rng, nd(rng)));
    }

    bool ok = true;
    auto require = [&](bool cond, const std::string& what, double value, double limit) {
        std::cout << (cond ? "  ok   " : "  FAIL ") << what << " = " << fmt(value) << " (limit " << fmt(limit)
                  << ")\n";
        ok = ok && cond;
    };

    double worst_rot = 0, worst_perm = 0, worst_inv = 0;
    for (const auto& mol : mols) {
        InvarianceReport r = check_invariance(mol, params, cfg, roots, rng);
        worst_rot = std::max(worst_rot, r.rotation_translation);
        worst_perm = std::max(worst_perm, r.permutation);
        worst_inv = std::max(worst_inv, r.inversion);
    }
    std::cout << "invariance (" << mols.size() << " molecules):\n";
    require(worst_rot <= 1e-8, "rotation+translation drift", worst_rot, 1e-8);
    require(worst_perm <= 1e-10, "permutation drift", worst_perm, 1e-10);
    require(worst_inv <= 1e-8, "inversion drift", worst_inv, 1e-8);

    double worst_fd = 0, worst_net = 0, worst_torque = 0;
    for (const auto& mol : mols) {
        ForceReport r = check_forces(mol, params, cfg, roots);
        worst_fd = std::max(worst_fd, r.fd_max_rel_error);
        worst_net = std::max(worst_net, r.net_force);
        worst_torque = std::max(worst_torque, r.net_torque);
    }
    std::cout << "forces:\n";
    require(worst_fd <= 1e-4, "gradient vs finite differences", worst_fd, 1e-4);
    require(worst_net <= 1e-8, "net force", worst_net, 1e-8);
    require(worst_torque <= 1e-7, "net torque", worst_torque, 1e-7);

    CutoffReport cr = check_cutoff_smoothness(params, cfg, roots);
    std::cout << "cutoff smoothness:\n";
    require(cr.max_jump_e <= 1e-5, "energy jump", cr.max_jump_e, 1e-5);
    require(cr.max_jump_d1 <= 1e-5, "first-derivative jump", cr.max_jump_d1, 1e-5);
    require(cr.max_jump_d2 <= 1e-5, "second-derivative jump", cr.max_jump_d2, 1e-5);
    require(cr.beyond_cutoff_spread <= 1e-12, "energy spread beyond cutoff", cr.beyond_cutoff_spread, 1e-12);

    std::cout << (ok ? "check passed\n" : "check FAILED\n");
    return ok ? 0 : 1;
}

int cmd_export_basis(const std::string& out_path, int resolution, double cutoff, int n_rbf, int n_srbf,
                     int n_shbf) {
    BasisConfig bc;
    bc.cutoff = cutoff;
    bc.n_rbf = n_rbf;
    bc.n_srbf = n_srbf;
    bc.n_shbf = n_shbf;
    bc.validate();
    RootTable roots = find_bessel_roots(n_shbf - 1, n_srbf);
    std::vector<double> k = default_wave_numbers(n_rbf, cutoff);

    std::ofstream out = open_out(out_path);
    out << "d,alpha";
    for (int n = 0; n < n_rbf; ++n) out << ",rbf_" << n;
    for (int l = 0; l < n_shbf; ++l)
        for (int n = 0; n < n_srbf; ++n) out << ",sbf_" << l << "_" << n;
    out << "\n";
    const double pi = std::acos(-1.0);
    for (int di = 1; di <= resolution; ++di) {
        double d = cutoff * di / resolution;
        std::vector<double> rbf = radial_basis(d, bc, k);
        for (int ai = 0; ai < resolution; ++ai) {
            double alpha = pi * ai / (resolution - 1);
            std::vector<double> sbf = spherical_basis_2d(d, alpha, bc, roots);
            out << fmt(d) << "," << fmt(alpha);
            for (double v : rbf) out << "," << fmt(v);
            for (double v : sbf) out << "," << fmt(v);
            out << "\n";
        }
    }
    return 0;
}

int cmd_export_filters(const std::string& ckpt_path, const std::string& out_path, int slice, int resolution,
                       int elements, int block) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    RootTable roots = make_roots(ck.config);
    FilterGrid grid = export_filter_grid(ck.params, ck.config, roots, slice, resolution, elements, block);
    write_filter_grid_csv(grid, out_path);
    return 0;
}

int cmd_graph(const std::string& xyz_path, double cutoff, const std::string& out_path) {
    Dataset ds = parse_xyz(xyz_path);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    *out << "frame,num_atoms,num_edges,num_triplets,min_dist,max_dist,mean_dist\n";
    for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        DirectedGraph g = build_graph(ds.frames[f].mol, cutoff);
        double lo = 0, hi = 0, mean = 0;
        if (!g.dist.empty()) {
            lo = *std::min_element(g.dist.begin(), g.dist.end());
            hi = *std::max_element(g.dist.begin(), g.dist.end());
            mean = std::accumulate(g.dist.begin(), g.dist.end(), 0.0) / static_cast<double>(g.dist.size());
        }
        *out << f << "," << g.num_atoms << "," << g.num_edges() << "," << g.num_triplets() << "," << fmt(lo) << ","
             << fmt(hi) << "," << fmt(mean) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directional message-passing potential: train, predict, verify, export"};
    app.require_subcommand(1);

    std::string config_path, out_path, log_path, ckpt_path, xyz_path;
    std::int64_t max_steps = -1, seed_override = -1;

    auto* train = app.add_subcommand("train", "Train a model from a key=value config file");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--out", out_path, "checkpoint output path (default: model.ckpt)");
    train->add_option("--log", log_path, "training log file (default: stdout)");
    train->add_option("--max-steps", max_steps, "override max_steps from the config");
    train->add_option("--seed", seed_override, "override seed from the config");

    auto* predict = app.add_subcommand("predict", "Per-frame predictions as CSV");
    predict->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    predict->add_option("--xyz", xyz_path, "extended XYZ input")->required();
    predict->add_option("--out", out_path, "CSV output (default: stdout)");

    auto* forces = app.add_subcommand("forces", "Per-atom forces as CSV");
    forces->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    forces->add_option("--xyz", xyz_path, "extended XYZ input")->required();
    forces->add_option("--out", out_path, "CSV output (default: stdout)");

    std::uint64_t check_seed = 0;
    int molecules = 10;
    bool full_size = false;
    auto* chk = app.add_subcommand("check", "Invariance / gradient / smoothness verification suite");
    chk->add_option("--seed", check_seed, "RNG seed")->default_val(0);
    chk->add_option("--molecules", molecules, "number of random molecules")->default_val(10);
    chk->add_option("--xyz", xyz_path, "check these molecules instead of random ones");
    chk->add_option("--checkpoint", ckpt_path, "check a saved model instead of a random one");
    chk->add_flag("--full-size", full_size, "use full default model dimensions");

    int resolution = 64, n_rbf = 6, n_srbf = 6, n_shbf = 7;
    double cutoff = 5.0;
    auto* eb = app.add_subcommand("export-basis", "Basis values on a (d, alpha) grid as CSV");
    eb->add_option("--out", out_path, "CSV output path")->required();
    eb->add_option("--resolution", resolution)->default_val(64);
    eb->add_option("--cutoff", cutoff)->default_val(5.0);
    eb->add_option("--n-rbf", n_rbf)->default_val(6);
    eb->add_option("--n-srbf", n_srbf)->default_val(6);
    eb->add_option("--n-shbf", n_shbf)->default_val(7);

    int slice = 1, elements = 15, block = 0;
    auto* ef = app.add_subcommand("export-filters", "Learned spatial filters on a (d, alpha) grid as CSV");
    ef->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    ef->add_option("--out", out_path, "CSV output path")->required();
    ef->add_option("--slice", slice, "bilinear tensor slice index")->default_val(1);
    ef->add_option("--resolution", resolution)->default_val(64);
    ef->add_option("--elements", elements, "number of filter vector entries to keep")->default_val(15);
    ef->add_option("--block", block, "interaction block index")->default_val(0);

    auto* gr = app.add_subcommand("graph", "Edge / triplet statistics of an XYZ file");
    gr->add_option("--xyz", xyz_path, "extended XYZ input")->required();
    gr->add_option("--cutoff", cutoff)->default_val(5.0);
    gr->add_option("--out", out_path, "CSV output (default: stdout)");

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(config_path, out_path, log_path, max_steps, seed_override);
        if (*predict) return cmd_predict(ckpt_path, xyz_path, out_path);
        if (*forces) return cmd_forces(ckpt_path, xyz_path, out_path);
        if (*chk) return cmd_check(check_seed, molecules, xyz_path, ckpt_path, full_size);
        if (*eb) return cmd_export_basis(out_path, resolution, cutoff, n_rbf, n_srbf, n_shbf);
        if (*ef) return cmd_export_filters(ckpt_path, out_path, slice, resolution, elements, block);
        if (*gr) return cmd_graph(xyz_path, cutoff, out_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
