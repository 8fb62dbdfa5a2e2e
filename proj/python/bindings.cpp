#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dimenet/filters.hpp"
#include "dimenet/io.hpp"
#include "dimenet/metrics.hpp"
#include "dimenet/train.hpp"
#include "dimenet/verify.hpp"

namespace py = pybind11;
using namespace dimenet;

namespace {

// Module-level handles keep Python signatures small: heavy objects
// (parameters, root tables) live in opaque holder classes.
struct Model {
    ModelConfig config;
    ParamSet params;
    RootTable roots;
};

Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
    Model m;
    m.config = cfg;
    m.params = init_params(cfg, seed);
    m.roots = make_roots(cfg);
    return m;
}

Model model_from_checkpoint(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    Model m;
    m.config = ck.config;
    m.params = std::move(ck.params);
    m.roots = make_roots(m.config);
    return m;
}

}  // namespace

PYBIND11_MODULE(_dimenet, mod) {
    mod.doc() = "Directional message-passing potential (C++ core)";

    py::class_<Molecule>(mod, "Molecule")
        .def(py::init([](std::vector<int> z, std::vector<std::array<double, 3>> pos) {
                 Molecule m;
                 m.z = std::move(z);
                 m.positions = std::move(pos);
                 m.validate();
                 return m;
             }),
             py::arg("z"), py::arg("positions"))
        .def_readonly("z", &Molecule::z)
        .def_readonly("positions", &Molecule::positions)
        .def("__len__", &Molecule::size);

    py::class_<Edge>(mod, "Edge")
        .def_readonly("src", &Edge::src)
        .def_readonly("dst", &Edge::dst);

    py::class_<Triplet>(mod, "Triplet")
        .def_readonly("kj", &Triplet::kj)
        .def_readonly("ji", &Triplet::ji);

    py::class_<DirectedGraph>(mod, "DirectedGraph")
        .def_readonly("num_atoms", &DirectedGraph::num_atoms)
        .def_readonly("cutoff", &DirectedGraph::cutoff)
        .def_readonly("edges", &DirectedGraph::edges)
        .def_readonly("dist", &DirectedGraph::dist)
        .def_readonly("triplets", &DirectedGraph::triplets)
        .def_readonly("angle", &DirectedGraph::angle);

    mod.def("build_graph", &build_graph, py::arg("molecule"), py::arg("cutoff"));
    mod.def("compute_angle", &compute_angle, py::arg("xk"), py::arg("xj"), py::arg("xi"));

    py::class_<BasisConfig>(mod, "BasisConfig")
        .def(py::init<>())
        .def_readwrite("cutoff", &BasisConfig::cutoff)
        .def_readwrite("n_rbf", &BasisConfig::n_rbf)
        .def_readwrite("n_srbf", &BasisConfig::n_srbf)
        .def_readwrite("n_shbf", &BasisConfig::n_shbf)
        .def_readwrite("envelope_p", &BasisConfig::envelope_p);

    mod.def("sph_bessel_j", &sph_bessel_j, py::arg("l"), py::arg("x"));
    mod.def("envelope", &envelope, py::arg("t"), py::arg("p"));
    mod.def(
        "radial_basis",
        [](double d, const BasisConfig& cfg) { return radial_basis(d, cfg, default_wave_numbers(cfg.n_rbf, cfg.cutoff)); },
        py::arg("d"), py::arg("config"));
    mod.def(
        "spherical_basis_2d",
        [](double d, double alpha, const BasisConfig& cfg) {
            RootTable roots = find_bessel_roots(cfg.n_shbf - 1, cfg.n_srbf);
            return spherical_basis_2d(d, alpha, cfg, roots);
        },
        py::arg("d"), py::arg("alpha"), py::arg("config"));

    py::enum_<RbfMode>(mod, "RbfMode").value("Bessel", RbfMode::Bessel).value("Gaussian", RbfMode::Gaussian);

    py::class_<ModelConfig>(mod, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("emb_size", &ModelConfig::emb_size)
        .def_readwrite("num_blocks", &ModelConfig::num_blocks)
        .def_readwrite("n_bilinear", &ModelConfig::n_bilinear)
        .def_readwrite("num_targets", &ModelConfig::num_targets)
        .def_readwrite("basis", &ModelConfig::basis)
        .def_readwrite("shared_output_blocks", &ModelConfig::shared_output_blocks)
        .def_readwrite("num_residual", &ModelConfig::num_residual)
        .def_readwrite("num_output_dense", &ModelConfig::num_output_dense)
        .def_readwrite("rbf_mode", &ModelConfig::rbf_mode)
        .def_readwrite("n_gaussian", &ModelConfig::n_gaussian)
        .def_readwrite("gaussian_gamma", &ModelConfig::gaussian_gamma)
        .def_readwrite("use_angles", &ModelConfig::use_angles)
        .def_readwrite("node_mode", &ModelConfig::node_mode)
        .def_readwrite("max_z", &ModelConfig::max_z);

    py::class_<Model>(mod, "Model")
        .def(py::init(&make_model), py::arg("config"), py::arg("seed") = 0)
        .def_static("load", &model_from_checkpoint, py::arg("path"))
        .def_property_readonly("config", [](const Model& m) { return m.config; })
        .def_property_readonly("num_params", [](const Model& m) { return m.params.total_size(); })
        .def("param_names", [](const Model& m) { return m.params.names; })
        .def(
            "predict", [](const Model& m, const Molecule& mol) { return forward(mol, m.params, m.config, m.roots); },
            py::arg("molecule"))
        .def(
            "energy_forces",
            [](const Model& m, const Molecule& mol) {
                EnergyForces ef = predict_energy_forces(mol, m.params, m.config, m.roots);
                return py::make_tuple(ef.energy, ef.forces);
            },
            py::arg("molecule"))
        .def(
            "save",
            [](const Model& m, const std::string& path, std::uint64_t seed) {
                Checkpoint ck;
                ck.config = m.config;
                ck.params = m.params;
                ck.seed = seed;
                save_checkpoint(path, ck);
            },
            py::arg("path"), py::arg("seed") = 0);

    mod.def("mae", &mae, py::arg("pred"), py::arg("target"));
    mod.def("std_mae", &std_mae, py::arg("maes"), py::arg("sigmas"));
    mod.def("log_mae", &log_mae, py::arg("maes"), py::arg("sigmas"));
    mod.def("element_number", &element_number, py::arg("symbol"));
    mod.def("element_symbol", &element_symbol, py::arg("z"), py::return_value_policy::copy);
}
