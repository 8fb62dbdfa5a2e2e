#ifndef DIMENET_IO_HPP
#define DIMENET_IO_HPP

#include <map>
#include <string>

#include "dimenet/train.hpp"

namespace dimenet {

/// Atomic number for an element symbol ("H" -> 1, ...); throws on unknown.
int element_number(const std::string& symbol);
const std::string& element_symbol(int z);

/// Extended XYZ reader. Per frame: atom count, then a key=value comment
/// line (must contain energy=<float>), then one "Sym x y z [fx fy fz]"
/// line per atom. energy_scale multiplies energies and forces at
/// ingestion (e.g. 0.0433641 for kcal/mol data).
Dataset parse_xyz(const std::string& path, double energy_scale = 1.0);

/// Writer for the same format (used by tooling and tests).
void write_xyz(const std::string& path, const Dataset& ds);

/// Subtract per-element reference energies from every frame's first target.
Dataset apply_atomref(const Dataset& ds, const std::map<int, double>& refs);

/// "DIMENET1" container: magic, length-prefixed JSON header (config +
/// array manifest), then raw little-endian float64 arrays. Round trips
/// bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Everything a `train` invocation needs, read from a plain key=value
/// config file (# comments). Unknown keys are an error.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    double energy_scale = 1.0;
    double val_fraction = 0.1;
    std::string train_file;
    std::string val_file;  // empty: split train_file by val_fraction
};

RunConfig parse_run_config(const std::string& path);
RunConfig default_run_config();

}  // namespace dimenet

#endif
