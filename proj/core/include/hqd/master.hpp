// master.hpp — deterministic propagation of the density-operator hierarchies
// for fermionic and bosonic environments. Pair indices (m, n) are stored as
// one multi-index of length 2J; sign factors act on the halves.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hqd/bcf.hpp"
#include "hqd/indexset.hpp"
#include "hqd/integrate.hpp"
#include "hqd/types.hpp"

namespace hqd::master {

struct MasterRun {
    SystemSpec spec;
    std::vector<bcf::Mode> modes; // one mode per channel, paired with couplings[j]
    TimeGrid grid;
    idx::Truncation truncation;
    Vector psi0;
    Method method = Method::RK4;
    double tol = 1e-9;
    // Keep only one of each Hermitian pair (m,n)/(n,m) and reconstruct the
    // partner by adjoint. OFF by default: the redundant full propagation
    // doubles as the pairing test.
    bool pair_reduction = false;
    int output_stride = 1;
    bool keep_aux = false;
};

// Stacked auxiliary density operators over a paired index space.
struct AuxDensitySet {
    std::shared_ptr<const idx::IndexSpace> space;
    std::vector<Matrix> matrices;
};

// Right-hand sides as free operations (used directly by tests; propagation
// uses the flat-buffer equivalent internally).
AuxDensitySet master_fermion_rhs(const AuxDensitySet& set, const SystemSpec& spec,
                                 std::span<const bcf::Mode> modes);
AuxDensitySet master_boson_rhs(const AuxDensitySet& set, const SystemSpec& spec,
                               std::span<const bcf::Mode> modes);

struct MasterResult {
    std::vector<double> times;
    std::vector<Matrix> rho;               // rho^{(0,0)} at each retained point
    std::vector<double> trace_drift;       // |Tr rho^{(0,0)} - 1|
    std::vector<double> pairing_residual;  // max over pairs of ||rho(m,n)^dag - rho(n,m)||_max
    std::vector<std::vector<Matrix>> aux;  // full sets when keep_aux is set
    int space_size = 0;
    double wall_seconds = 0.0;
};

// Integrates the hierarchy from rho^{(0,0)} = |psi0><psi0| (all other
// auxiliary operators zero) and reports the conserved-quantity diagnostics
// at every retained grid point.
MasterResult propagate_master(const MasterRun& run);

// Paired index space for the run (2J channels; Depth counts |m| + |n|).
std::shared_ptr<const idx::IndexSpace> build_pair_space(const MasterRun& run);

} // namespace hqd::master
