// oracle.hpp — exact brute-force reference: full system (x) bath Schroedinger
// propagation for small discretized baths, traced down to the reduced state.

#pragma once

#include <vector>

#include "hqd/bcf.hpp"
#include "hqd/types.hpp"

namespace hqd::oracle {

struct DiscreteBathChannel {
    std::vector<double> frequencies;  // w_{j,l}
    std::vector<Complex> couplings;   // g_{j,l}
};

struct DiscreteBathSpec {
    std::vector<DiscreteBathChannel> channels; // one per system coupling L_j
    Statistics statistics = Statistics::Fermionic;
    int n_max = 1; // bosonic Fock cutoff per mode (ignored for fermions)

    int total_modes() const;
};

Matrix kron(const Matrix& a, const Matrix& b);

// Jordan-Wigner ladder operators b_1..b_M on the 2^M mode space; satisfy
// {b_l, b_m} = 0 and {b_l, b_m^dag} = delta_lm exactly.
std::vector<Matrix> fermionic_ladders(int modes);

// Truncated harmonic ladder on n_levels Fock states.
Matrix bosonic_ladder(int n_levels);

// H + H_env + H_int on the product space (system factor first).
Matrix total_hamiltonian(const SystemSpec& spec, const DiscreteBathSpec& bath);

struct OracleResult {
    std::vector<double> times;
    std::vector<Matrix> rho;
    double norm_drift = 0.0; // max | ||Psi|| - 1 | over the run
};

// Propagates psi0 (x) |vacuum> by exact eigendecomposition stepping of the
// total Hamiltonian and partial-traces the environment at every grid point.
OracleResult exact_propagate(const SystemSpec& spec, const DiscreteBathSpec& bath,
                             const TimeGrid& grid, const Vector& psi0);

// Raises the bosonic Fock cutoff until the reduced state changes by less
// than tol, then returns the converged run.
OracleResult exact_propagate_bosonic_converged(const SystemSpec& spec, DiscreteBathSpec bath,
                                               const TimeGrid& grid, const Vector& psi0,
                                               double tol = 1e-8, int n_max_limit = 14);

// Per-channel hierarchy modes of the same bath, so hierarchy and oracle
// consume identical physics.
std::vector<std::vector<bcf::Mode>> bath_to_modes(const DiscreteBathSpec& bath);

} // namespace hqd::oracle
