#include "hqd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hqd::cli {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    fail(Errc::SchemaError, path + ": " + what);
}

const json& member(const json& node, const std::string& path, const std::string& key) {
    auto it = node.find(key);
    if (it == node.end()) schema_fail(path + "." + key, "missing required field");
    return *it;
}

double as_number(const json& node, const std::string& path) {
    if (!node.is_number()) schema_fail(path, "expected a number");
    return node.get<double>();
}

int as_int(const json& node, const std::string& path) {
    if (!node.is_number_integer()) schema_fail(path, "expected an integer");
    return node.get<int>();
}

Complex as_complex(const json& node, const std::string& path) {
    if (!node.is_array() || node.size() != 2) schema_fail(path, "expected a [re, im] pair");
    return Complex(as_number(node[0], path + "[0]"), as_number(node[1], path + "[1]"));
}

Vector as_vector(const json& node, const std::string& path) {
    if (!node.is_array() || node.empty()) schema_fail(path, "expected a list of [re, im] pairs");
    Vector v(node.size());
    for (std::size_t i = 0; i < node.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = as_complex(node[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Matrix as_matrix(const json& node, const std::string& path, Eigen::Index dim) {
    if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != dim)
        schema_fail(path, "expected " + std::to_string(dim) + " rows");
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const json& row = node[static_cast<std::size_t>(r)];
        const std::string row_path = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
            schema_fail(row_path, "expected " + std::to_string(dim) + " entries");
        for (Eigen::Index c = 0; c < dim; ++c)
            m(r, c) = as_complex(row[static_cast<std::size_t>(c)],
                                 row_path + "[" + std::to_string(c) + "]");
    }
    return m;
}

Statistics parse_statistics(const json& node, const std::string& path) {
    if (!node.is_string()) schema_fail(path, "expected \"bosonic\" or \"fermionic\"");
    const std::string s = node.get<std::string>();
    if (s == "bosonic") return Statistics::Bosonic;
    if (s == "fermionic") return Statistics::Fermionic;
    schema_fail(path, "unknown statistics '" + s + "'");
}

std::optional<Solver> parse_solver(const json& node, const std::string& path) {
    const std::string s = node.get<std::string>();
    if (s == "hops") return Solver::Hops;
    if (s == "master-boson") return Solver::MasterBoson;
    if (s == "master-fermion") return Solver::MasterFermion;
    if (s == "oracle") return Solver::Oracle;
    if (s == "bcf") return Solver::Bcf;
    if (s == "verify") return Solver::Verify;
    schema_fail(path, "unknown solver '" + s + "'");
}

void parse_bath(const json& bath, RunConfig& config) {
    int present = 0;
    present += bath.contains("modes") ? 1 : 0;
    present += bath.contains("discrete") ? 1 : 0;
    present += bath.contains("spectral") ? 1 : 0;
    if (present != 1)
        schema_fail("bath", "exactly one of modes / discrete / spectral must be present");

    if (bath.contains("modes")) {
        config.bath_kind = BathKind::Modes;
        const json& modes = bath["modes"];
        if (!modes.is_array() || modes.empty())
            schema_fail("bath.modes", "expected a list of (Re g, Im g, Re w, Im w) quadruples");
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const json& q = modes[i];
            const std::string path = "bath.modes[" + std::to_string(i) + "]";
            if (!q.is_array() || q.size() != 4)
                schema_fail(path, "expected a (Re g, Im g, Re w, Im w) quadruple");
            bcf::Mode mode{Complex(as_number(q[0], path), as_number(q[1], path)),
                           Complex(as_number(q[2], path), as_number(q[3], path))};
            if (mode.w.real() < 0) schema_fail(path, "mode must not grow: Re w >= 0");
            config.modes.push_back(mode);
        }
        return;
    }

    if (bath.contains("discrete")) {
        config.bath_kind = BathKind::Discrete;
        const json& disc = bath["discrete"];
        const json& channels = member(disc, "bath.discrete", "channels");
        if (!channels.is_array() || channels.empty())
            schema_fail("bath.discrete.channels", "expected a non-empty list");
        for (std::size_t j = 0; j < channels.size(); ++j) {
            const std::string path = "bath.discrete.channels[" + std::to_string(j) + "]";
            const json& ch = channels[j];
            oracle::DiscreteBathChannel out;
            const json& freqs = member(ch, path, "frequencies");
            const json& coups = member(ch, path, "couplings");
            if (!freqs.is_array() || !coups.is_array() || freqs.size() != coups.size() ||
                freqs.empty())
                schema_fail(path, "frequencies and couplings must be equal-length lists");
            for (std::size_t l = 0; l < freqs.size(); ++l) {
                out.frequencies.push_back(
                    as_number(freqs[l], path + ".frequencies[" + std::to_string(l) + "]"));
                out.couplings.push_back(
                    as_complex(coups[l], path + ".couplings[" + std::to_string(l) + "]"));
            }
            config.discrete.channels.push_back(std::move(out));
        }
        config.discrete.statistics = config.system.statistics;
        if (disc.contains("n_max")) config.discrete.n_max = as_int(disc["n_max"], "bath.discrete.n_max");
        return;
    }

    config.bath_kind = BathKind::Spectral;
    const json& spec = bath["spectral"];
    if (spec.contains("lorentzian")) {
        const json& lor = spec["lorentzian"];
        config.spectral.density = bcf::PoleSpectralDensity::lorentzian(
            as_number(member(lor, "bath.spectral.lorentzian", "strength"),
                      "bath.spectral.lorentzian.strength"),
            as_number(member(lor, "bath.spectral.lorentzian", "center"),
                      "bath.spectral.lorentzian.center"),
            as_number(member(lor, "bath.spectral.lorentzian", "width"),
                      "bath.spectral.lorentzian.width"));
    } else if (spec.contains("poles")) {
        const json& poles = spec["poles"];
        if (!poles.is_array() || poles.empty())
            schema_fail("bath.spectral.poles", "expected (Re p, Im p, Re r, Im r) quadruples");
        for (std::size_t i = 0; i < poles.size(); ++i) {
            const json& q = poles[i];
            const std::string path = "bath.spectral.poles[" + std::to_string(i) + "]";
            if (!q.is_array() || q.size() != 4)
                schema_fail(path, "expected a (Re p, Im p, Re r, Im r) quadruple");
            config.spectral.density.poles.push_back(
                {Complex(as_number(q[0], path), as_number(q[1], path)),
                 Complex(as_number(q[2], path), as_number(q[3], path))});
        }
    } else {
        schema_fail("bath.spectral", "needs either poles or lorentzian");
    }
    config.spectral.thermal.temperature =
        as_number(member(spec, "bath.spectral", "temperature"), "bath.spectral.temperature");
    if (config.spectral.thermal.temperature < 0)
        schema_fail("bath.spectral.temperature", "temperature must be >= 0");
    if (spec.contains("chemical_potential"))
        config.spectral.thermal.chemical_potential =
            as_number(spec["chemical_potential"], "bath.spectral.chemical_potential");
    if (spec.contains("scheme")) {
        const std::string s = spec["scheme"].get<std::string>();
        if (s == "pade")
            config.spectral.scheme = bcf::PoleScheme::Pade;
        else if (s == "matsubara")
            config.spectral.scheme = bcf::PoleScheme::Matsubara;
        else
            schema_fail("bath.spectral.scheme", "unknown scheme '" + s + "'");
    }
    if (spec.contains("count")) config.spectral.count = as_int(spec["count"], "bath.spectral.count");
    if (config.spectral.count < 0) schema_fail("bath.spectral.count", "count must be >= 0");
}

void check_solver_compatibility(const RunConfig& config) {
    if (!config.solver) return;
    const Statistics stats = config.system.statistics;
    switch (*config.solver) {
        case Solver::Hops:
            // Grassmann noise cannot be sampled; the stochastic hierarchy is
            // bosonic only.
            require(stats == Statistics::Bosonic, Errc::IncompatibleSolver,
                    "solver hops requires bosonic statistics");
            break;
        case Solver::MasterBoson:
            require(stats == Statistics::Bosonic, Errc::IncompatibleSolver,
                    "solver master-boson requires bosonic statistics");
            break;
        case Solver::MasterFermion:
            require(stats == Statistics::Fermionic, Errc::IncompatibleSolver,
                    "solver master-fermion requires fermionic statistics");
            break;
        case Solver::Oracle:
            require(config.bath_kind == BathKind::Discrete, Errc::IncompatibleSolver,
                    "solver oracle requires a discrete bath");
            break;
        case Solver::Bcf:
        case Solver::Verify:
            break;
    }
}

} // namespace

const char* solver_name(Solver s) {
    switch (s) {
        case Solver::Hops: return "hops";
        case Solver::MasterBoson: return "master-boson";
        case Solver::MasterFermion: return "master-fermion";
        case Solver::Oracle: return "oracle";
        case Solver::Bcf: return "bcf";
        case Solver::Verify: return "verify";
    }
    return "unknown";
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::SchemaError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(Errc::SchemaError, "config root must be an object");

    RunConfig config;
    const json& system = member(doc, "", "system");
    config.system.dim = as_int(member(system, "system", "dim"), "system.dim");
    if (config.system.dim <= 0) schema_fail("system.dim", "dimension must be positive");
    config.system.statistics =
        parse_statistics(member(system, "system", "statistics"), "system.statistics");
    config.system.hamiltonian =
        as_matrix(member(system, "system", "hamiltonian"), "system.hamiltonian", config.system.dim);
    const json& couplings = member(system, "system", "couplings");
    if (!couplings.is_array() || couplings.empty())
        schema_fail("system.couplings", "expected a non-empty list of matrices");
    for (std::size_t j = 0; j < couplings.size(); ++j)
        config.system.couplings.push_back(as_matrix(
            couplings[j], "system.couplings[" + std::to_string(j) + "]", config.system.dim));
    config.system = validate_system(std::move(config.system));
    if (system.contains("psi0")) {
        config.psi0 = as_vector(system["psi0"], "system.psi0");
        if (config.psi0.size() != config.system.dim)
            schema_fail("system.psi0", "length must equal system.dim");
    } else {
        config.psi0 = Vector::Zero(config.system.dim);
        config.psi0(0) = 1.0;
    }

    parse_bath(member(doc, "", "bath"), config);

    if (doc.contains("solver")) config.solver = parse_solver(doc["solver"], "solver");

    if (doc.contains("grid")) {
        const json& grid = doc["grid"];
        config.grid.t0 = as_number(member(grid, "grid", "t0"), "grid.t0");
        config.grid.t1 = as_number(member(grid, "grid", "t1"), "grid.t1");
        config.grid.steps = as_int(member(grid, "grid", "steps"), "grid.steps");
        if (config.grid.steps <= 0 || !(config.grid.t1 > config.grid.t0))
            schema_fail("grid", "needs t1 > t0 and steps > 0");
    }

    if (doc.contains("truncation")) {
        const json& trunc = doc["truncation"];
        if (trunc.is_string() && trunc.get<std::string>() == "full") {
            config.truncation = idx::Truncation::full();
        } else if (trunc.is_object()) {
            config.truncation = idx::Truncation{};
            if (trunc.contains("depth")) {
                const int k = as_int(trunc["depth"], "truncation.depth");
                if (k < 0) schema_fail("truncation.depth", "depth must be >= 0");
                config.truncation.depth = k;
            }
            if (trunc.contains("energy")) {
                idx::Truncation::EnergyCut cut;
                cut.w_max = as_number(member(trunc["energy"], "truncation.energy", "w_max"),
                                      "truncation.energy.w_max");
                if (cut.w_max <= 0) schema_fail("truncation.energy.w_max", "must be positive");
                config.truncation.energy = std::move(cut); // w filled per run from the modes
            }
            if (!config.truncation.depth && !config.truncation.energy)
                schema_fail("truncation", "expected depth, energy, or \"full\"");
        } else {
            schema_fail("truncation", "expected an object or \"full\"");
        }
    }

    if (doc.contains("method")) {
        const std::string m = doc["method"].get<std::string>();
        if (m == "rk4")
            config.method = Method::RK4;
        else if (m == "rkf45")
            config.method = Method::RKF45;
        else
            schema_fail("method", "expected rk4 or rkf45");
    }
    if (doc.contains("tol")) config.tol = as_number(doc["tol"], "tol");
    if (doc.contains("trajectories"))
        config.trajectories = as_int(doc["trajectories"], "trajectories");
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("seeds")) {
        for (const auto& s : doc["seeds"]) config.seeds.push_back(s.get<std::uint64_t>());
    }
    if (doc.contains("terminator")) config.terminator = doc["terminator"].get<bool>();
    if (doc.contains("pair_reduction"))
        config.pair_reduction = doc["pair_reduction"].get<bool>();
    if (doc.contains("output_stride")) {
        config.output_stride = as_int(doc["output_stride"], "output_stride");
        if (config.output_stride < 1) schema_fail("output_stride", "must be >= 1");
    }
    if (doc.contains("verify")) {
        const json& v = doc["verify"];
        if (v.contains("trials")) config.verify_trials = as_int(v["trials"], "verify.trials");
    }

    check_solver_compatibility(config);
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::SchemaError, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

ChannelExpansion expand_channels(const RunConfig& config) {
    ChannelExpansion out;
    out.spec = config.system;
    out.spec.couplings.clear();
    const auto& base = config.system.couplings;

    switch (config.bath_kind) {
        case BathKind::Modes: {
            if (config.modes.size() == base.size()) {
                out.spec.couplings = base;
                out.modes = config.modes;
            } else if (base.size() == 1) {
                for (const auto& m : config.modes) {
                    out.spec.couplings.push_back(base[0]);
                    out.modes.push_back(m);
                }
            } else {
                fail(Errc::SchemaError,
                     "bath.modes length must match system.couplings (or use one coupling)");
            }
            break;
        }
        case BathKind::Discrete: {
            require(config.discrete.channels.size() == base.size(), Errc::SchemaError,
                    "bath.discrete.channels must pair 1:1 with system.couplings");
            const auto per_channel = oracle::bath_to_modes(config.discrete);
            for (std::size_t j = 0; j < per_channel.size(); ++j) {
                for (const auto& m : per_channel[j]) {
                    out.spec.couplings.push_back(base[j]);
                    out.modes.push_back(m);
                }
            }
            break;
        }
        case BathKind::Spectral: {
            require(base.size() == 1, Errc::SchemaError,
                    "spectral baths drive exactly one coupling operator");
            // The merged thermal process Z + W only exists for L = L^dag.
            require(hermiticity_defect(base[0]) <= 1e-12, Errc::IncompatibleSolver,
                    "the thermal BCF route requires a self-adjoint coupling");
            const auto modes =
                bcf::residue_expand(config.spectral.density, config.spectral.thermal,
                                    config.spectral.scheme, config.spectral.count);
            for (const auto& m : modes) {
                out.spec.couplings.push_back(base[0]);
                out.modes.push_back(m);
            }
            break;
        }
        case BathKind::None:
            fail(Errc::SchemaError, "no bath given");
    }
    return out;
}

} // namespace hqd::cli
