// config.hpp — run configuration: JSON schema ingestion and validation.
// Complex numbers are [re, im] pairs; matrices are row-major lists of rows.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hqd/bcf.hpp"
#include "hqd/indexset.hpp"
#include "hqd/integrate.hpp"
#include "hqd/oracle.hpp"
#include "hqd/types.hpp"

namespace hqd::cli {

enum class Solver { Hops, MasterBoson, MasterFermion, Oracle, Bcf, Verify };

const char* solver_name(Solver s);

enum class BathKind { None, Modes, Discrete, Spectral };

struct SpectralBath {
    bcf::PoleSpectralDensity density;
    bcf::ThermalParams thermal;
    bcf::PoleScheme scheme = bcf::PoleScheme::Pade;
    int count = 8;
};

struct RunConfig {
    SystemSpec system;
    Vector psi0;

    BathKind bath_kind = BathKind::None;
    std::vector<bcf::Mode> modes;
    oracle::DiscreteBathSpec discrete;
    SpectralBath spectral;

    std::optional<Solver> solver;
    TimeGrid grid{0.0, 1.0, 100};
    idx::Truncation truncation = idx::Truncation::by_depth(4);
    Method method = Method::RK4;
    double tol = 1e-9;

    int trajectories = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds; // explicit list wins over (seed, trajectories)

    bool terminator = false;
    bool pair_reduction = false;
    int output_stride = 1;
    int verify_trials = 100;
};

// Parses and validates a config document; throws Error(SchemaError) with a
// field path on malformed input and IncompatibleSolver for guarded
// solver/statistics combinations.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

// Hierarchy channels for the selected bath: one mode per channel with its
// coupling operator. Mode lists pair 1:1 with couplings (or replicate a
// single coupling); discrete baths expand each bath mode into one channel;
// spectral baths expand the thermal BCF and require one self-adjoint
// coupling.
struct ChannelExpansion {
    SystemSpec spec;               // couplings replicated per channel
    std::vector<bcf::Mode> modes;  // one per channel
};

ChannelExpansion expand_channels(const RunConfig& config);

} // namespace hqd::cli
