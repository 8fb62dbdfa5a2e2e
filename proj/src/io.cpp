#include "dimenet/io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dimenet {

namespace {

const std::array<const char*, 95> kSymbols = {
    "X",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu",
    "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au",
    "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu"};

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        parse_fail(path, line, "expected a number, got '" + s + "'");
    }
    if (pos != s.size()) parse_fail(path, line, "trailing characters in number '" + s + "'");
    return v;
}

}  // namespace

int element_number(const std::string& symbol) {
    for (std::size_t z = 1; z < kSymbols.size(); ++z)
        if (symbol == kSymbols[z]) return static_cast<int>(z);
    throw std::runtime_error("unknown element symbol '" + symbol + "'");
}

const std::string& element_symbol(int z) {
    static std::array<std::string, 95> cache = [] {
        std::array<std::string, 95> c;
        for (std::size_t i = 0; i < kSymbols.size(); ++i) c[i] = kSymbols[i];
        return c;
    }();
    check(z >= 1 && z < static_cast<int>(cache.size()), "element_symbol: Z out of range");
    return cache[static_cast<std::size_t>(z)];
}

Dataset parse_xyz(const std::string& path, double energy_scale) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_xyz: cannot open " + path);

    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool first_frame = true;

    while (std::getline(in, line)) {
        ++lineno;
        // skip blank lines between frames
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        int natoms = 0;
        try {
            natoms = std::stoi(line);
        } catch (const std::exception&) {
            parse_fail(path, lineno, "malformed atom count '" + line + "'");
        }
        if (natoms < 1) parse_fail(path, lineno, "atom count must be >= 1");

        if (!std::getline(in, line)) parse_fail(path, lineno + 1, "missing comment line");
        ++lineno;
        // key=value properties; only energy is required, lattice etc. ignored
        double energy = 0.0;
        bool have_energy = false;
        {
            std::istringstream ss(line);
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                std::string key = tok.substr(0, eq);
                std::string val = tok.substr(eq + 1);
                if (!val.empty() && val.front() == '"') continue;  // quoted metadata, ignored
                if (key == "energy" || key == "Energy" || key == "E") {
                    energy = parse_double(val, path, lineno);
                    have_energy = true;
                }
            }
        }
        if (!have_energy) parse_fail(path, lineno, "comment line lacks energy=<float>");

        Frame frame;
        frame.targets = {energy * energy_scale};
        bool frame_has_forces = false;
        for (int a = 0; a < natoms; ++a) {
            if (!std::getline(in, line)) parse_fail(path, lineno + 1, "unexpected end of file in frame");
            ++lineno;
            std::istringstream ss(line);
            std::string sym;
            std::vector<double> nums;
            ss >> sym;
            std::string tok;
            while (ss >> tok) nums.push_back(parse_double(tok, path, lineno));
            if (sym.empty()) parse_fail(path, lineno, "missing element symbol");
            int z;
            try {
                z = element_number(sym);
            } catch (const std::exception& e) {
                parse_fail(path, lineno, e.what());
            }
            if (nums.size() != 3 && nums.size() != 6)
                parse_fail(path, lineno, "expected 'Sym x y z' or 'Sym x y z fx fy fz'");
            frame.mol.z.push_back(z);
            frame.mol.positions.push_back({nums[0], nums[1], nums[2]});
            const bool has_f = nums.size() == 6;
            if (a == 0) {
                frame_has_forces = has_f;
                if (frame_has_forces) frame.forces.emplace();
            } else if (has_f != frame_has_forces) {
                parse_fail(path, lineno, "inconsistent force columns within frame");
            }
            if (has_f) frame.forces->push_back({nums[3] * energy_scale, nums[4] * energy_scale,
                                                nums[5] * energy_scale});
        }

        if (first_frame) {
            ds.has_forces = frame_has_forces;
            first_frame = false;
        } else if (frame_has_forces != ds.has_forces) {
            parse_fail(path, lineno, "force presence differs between frames");
        }
        ds.frames.push_back(std::move(frame));
    }
    if (ds.frames.empty()) throw std::runtime_error("parse_xyz: no frames in " + path);
    ds.num_targets = 1;
    ds.validate();
    return ds;
}

void write_xyz(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_xyz: cannot open " + path);
    out << std::setprecision(17);
    for (const auto& f : ds.frames) {
        out << f.mol.size() << "\n";
        out << "energy=" << f.targets.at(0) << "\n";
        for (int a = 0; a < f.mol.size(); ++a) {
            out << element_symbol(f.mol.z[static_cast<std::size_t>(a)]);
            for (int k = 0; k < 3; ++k) out << " " << f.mol.positions[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
            if (f.forces)
                for (int k = 0; k < 3; ++k) out << " " << (*f.forces)[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
            out << "\n";
        }
    }
}

Dataset apply_atomref(const Dataset& ds, const std::map<int, double>& refs) {
    Dataset out = ds;
    for (auto& f : out.frames) {
        double shift = 0.0;
        for (int z : f.mol.z) {
            const auto it = refs.find(z);
            if (it == refs.end())
                throw std::runtime_error("apply_atomref: no reference energy for element Z=" +
                                         std::to_string(z));
            shift += it->second;
        }
        f.targets.at(0) -= shift;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
    return json{{"emb_size", c.emb_size},
                {"num_blocks", c.num_blocks},
                {"n_bilinear", c.n_bilinear},
                {"num_targets", c.num_targets},
                {"cutoff", c.basis.cutoff},
                {"n_rbf", c.basis.n_rbf},
                {"n_srbf", c.basis.n_srbf},
                {"n_shbf", c.basis.n_shbf},
                {"envelope_p", c.basis.envelope_p},
                {"shared_output_blocks", c.shared_output_blocks},
                {"num_residual", c.num_residual},
                {"num_output_dense", c.num_output_dense},
                {"rbf_mode", c.rbf_mode == RbfMode::Gaussian ? "gaussian" : "bessel"},
                {"n_gaussian", c.n_gaussian},
                {"gaussian_gamma", c.gaussian_gamma},
                {"use_angles", c.use_angles},
                {"node_mode", c.node_mode},
                {"max_z", c.max_z}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.emb_size = j.at("emb_size").get<int>();
    c.num_blocks = j.at("num_blocks").get<int>();
    c.n_bilinear = j.at("n_bilinear").get<int>();
    c.num_targets = j.at("num_targets").get<int>();
    c.basis.cutoff = j.at("cutoff").get<double>();
    c.basis.n_rbf = j.at("n_rbf").get<int>();
    c.basis.n_srbf = j.at("n_srbf").get<int>();
    c.basis.n_shbf = j.at("n_shbf").get<int>();
    c.basis.envelope_p = j.at("envelope_p").get<int>();
    c.shared_output_blocks = j.at("shared_output_blocks").get<bool>();
    c.num_residual = j.at("num_residual").get<int>();
    c.num_output_dense = j.at("num_output_dense").get<int>();
    c.rbf_mode = j.at("rbf_mode").get<std::string>() == "gaussian" ? RbfMode::Gaussian : RbfMode::Bessel;
    c.n_gaussian = j.at("n_gaussian").get<int>();
    c.gaussian_gamma = j.at("gaussian_gamma").get<double>();
    c.use_angles = j.at("use_angles").get<bool>();
    c.node_mode = j.at("node_mode").get<bool>();
    c.max_z = j.at("max_z").get<int>();
    return c;
}

constexpr char kMagic[8] = {'D', 'I', 'M', 'E', 'N', 'E', 'T', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json manifest = json::array();
    std::vector<const Tensor*> arrays;
    std::uint64_t offset = 0;
    auto add = [&](const std::string& name, const Tensor& t) {
        manifest.push_back(json{{"name", name}, {"shape", t.shape}, {"offset", offset}});
        arrays.push_back(&t);
        offset += static_cast<std::uint64_t>(t.size()) * 8;
    };
    for (std::size_t i = 0; i < ck.params.count(); ++i)
        add("param:" + ck.params.names[i], ck.params.values[i]);
    if (ck.has_ema)
        for (std::size_t i = 0; i < ck.ema.size(); ++i) add("ema:" + ck.params.names[i], ck.ema[i]);
    if (ck.has_opt)
        for (std::size_t i = 0; i < ck.opt.m.size(); ++i) {
            add("opt_m:" + ck.params.names[i], ck.opt.m[i]);
            add("opt_v:" + ck.params.names[i], ck.opt.v[i]);
            add("opt_vhat:" + ck.params.names[i], ck.opt.vhat[i]);
        }

    json header{{"format", ck.version},
                {"config", config_to_json(ck.config)},
                {"seed", ck.seed},
                {"step", ck.step},
                {"arrays", manifest}};
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, 8);
    write_u64(out, hs.size());
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    // IEEE-754 doubles, little-endian byte order assumed (checked at load).
    for (const Tensor* t : arrays)
        out.write(reinterpret_cast<const char*>(t->data.data()),
                  static_cast<std::streamsize>(t->data.size() * 8));
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const std::uint64_t hlen = read_u64(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);

    json header = json::parse(hs);
    Checkpoint ck;
    ck.version = header.at("format").get<int>();
    ck.config = config_from_json(header.at("config"));
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.step = header.at("step").get<std::int64_t>();

    const std::streampos data_start = in.tellg();
    for (const auto& entry : header.at("arrays")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
        const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
        Tensor t;
        t.shape = shape;
        std::int64_t n = 1;
        for (auto s : shape) n *= s;
        t.data.resize(static_cast<std::size_t>(n));
        in.seekg(data_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(n * 8));
        if (!in) throw std::runtime_error("load_checkpoint: truncated array '" + name + "' in " + path);

        const auto colon = name.find(':');
        const std::string kind = name.substr(0, colon);
        const std::string pname = name.substr(colon + 1);
        if (kind == "param") {
            ck.params.add(pname, std::move(t));
        } else if (kind == "ema") {
            ck.has_ema = true;
            ck.ema.push_back(std::move(t));
        } else if (kind == "opt_m") {
            ck.has_opt = true;
            ck.opt.m.push_back(std::move(t));
        } else if (kind == "opt_v") {
            ck.opt.v.push_back(std::move(t));
        } else if (kind == "opt_vhat") {
            ck.opt.vhat.push_back(std::move(t));
        } else {
            throw std::runtime_error("load_checkpoint: unknown array kind '" + kind + "'");
        }
    }

    // Cross-check against the config's expected layout.
    const ParamSet ref = init_params(ck.config, 0);
    if (ref.names != ck.params.names)
        throw std::runtime_error("load_checkpoint: parameter manifest does not match config");
    for (std::size_t i = 0; i < ref.count(); ++i)
        if (ref.values[i].shape != ck.params.values[i].shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + ref.names[i]);
    return ck;
}

// ---------------------------------------------------------------------------
// key=value run config

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_run_config: cannot open " + path);
    RunConfig rc;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string key, eq, val;
        std::istringstream ss(line);
        if (!(ss >> key)) continue;
        const auto kq = key.find('=');
        if (kq != std::string::npos) {
            val = key.substr(kq + 1);
            key = key.substr(0, kq);
            if (val.empty()) ss >> val;
        } else {
            ss >> eq;
            if (eq == "=") {
                ss >> val;
            } else if (!eq.empty() && eq[0] == '=') {
                val = eq.substr(1);
            }
        }
        if (key.empty() || val.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");

        auto as_d = [&] { return parse_double(val, path, lineno); };
        auto as_i = [&] { return static_cast<int>(as_d()); };
        auto as_i64 = [&] { return static_cast<std::int64_t>(as_d()); };
        auto as_b = [&] {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected boolean");
        };

        if (key == "emb_size") rc.model.emb_size = as_i();
        else if (key == "num_blocks") rc.model.num_blocks = as_i();
        else if (key == "n_bilinear") rc.model.n_bilinear = as_i();
        else if (key == "num_targets") rc.model.num_targets = as_i();
        else if (key == "cutoff") rc.model.basis.cutoff = as_d();
        else if (key == "n_rbf") rc.model.basis.n_rbf = as_i();
        else if (key == "n_srbf") rc.model.basis.n_srbf = as_i();
        else if (key == "n_shbf") rc.model.basis.n_shbf = as_i();
        else if (key == "envelope_p") rc.model.basis.envelope_p = as_i();
        else if (key == "shared_output_blocks") rc.model.shared_output_blocks = as_b();
        else if (key == "num_residual") rc.model.num_residual = as_i();
        else if (key == "num_output_dense") rc.model.num_output_dense = as_i();
        else if (key == "rbf_mode") {
            if (val == "bessel") rc.model.rbf_mode = RbfMode::Bessel;
            else if (val == "gaussian") rc.model.rbf_mode = RbfMode::Gaussian;
            else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": rbf_mode must be bessel|gaussian");
        }
        else if (key == "n_gaussian") rc.model.n_gaussian = as_i();
        else if (key == "gaussian_gamma") rc.model.gaussian_gamma = as_d();
        else if (key == "use_angles") rc.model.use_angles = as_b();
        else if (key == "node_mode") rc.model.node_mode = as_b();
        else if (key == "max_z") rc.model.max_z = as_i();
        else if (key == "rho") rc.train.rho = as_d();
        else if (key == "lr") rc.train.lr = as_d();
        else if (key == "batch_size") rc.train.batch_size = as_i();
        else if (key == "warmup_steps") rc.train.warmup_steps = as_i64();
        else if (key == "decay_rate") rc.train.decay_rate = as_d();
        else if (key == "decay_steps") rc.train.decay_steps = as_d();
        else if (key == "ema_decay") rc.train.ema_decay = as_d();
        else if (key == "max_steps") rc.train.max_steps = as_i64();
        else if (key == "patience") rc.train.patience = as_i();
        else if (key == "eval_interval") rc.train.eval_interval = as_i64();
        else if (key == "seed") rc.train.seed = static_cast<std::uint64_t>(as_i64());
        else if (key == "energy_scale") rc.energy_scale = as_d();
        else if (key == "val_fraction") rc.val_fraction = as_d();
        else if (key == "train_file") rc.train_file = val;
        else if (key == "val_file") rc.val_file = val;
        else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return rc;
}

}  // namespace dimenet
