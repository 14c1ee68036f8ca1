// hops.hpp — stochastic bosonic hierarchy of pure states: single-trajectory
// propagation under one noise realization and deterministic ensemble
// averaging into the reduced density operator.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hqd/bcf.hpp"
#include "hqd/indexset.hpp"
#include "hqd/integrate.hpp"
#include "hqd/noise.hpp"
#include "hqd/types.hpp"

namespace hqd::hops {

struct HopsRun {
    SystemSpec spec; // bosonic
    std::vector<bcf::Mode> modes; // one mode per channel, paired with couplings[j]
    TimeGrid grid;
    idx::Truncation truncation;
    Vector psi0;
    // Static closure for auxiliary states cut off by the truncation; an
    // approximation, OFF by default.
    bool terminator = false;
    Method method = Method::RK4;
    double tol = 1e-9;
};

// Stacked auxiliary vectors psi^(k) in enumeration order.
struct HopsState {
    std::shared_ptr<const idx::IndexSpace> space;
    std::vector<Vector> vectors;
};

// d/dt of the hierarchy at time t for given noise values Zbar_j(t).
HopsState hops_rhs(const HopsState& state, double t, std::span<const Complex> zbar,
                   const HopsRun& run);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> system_state;       // psi^(0) at each grid point
    std::vector<std::vector<Vector>> aux;   // all auxiliary vectors if requested
    std::uint64_t seed = 0;
};

// Integrates one noise realization; noise values between samples come from
// cubic interpolation of the sampled path.
Trajectory propagate_trajectory(const HopsRun& run, std::uint64_t seed, bool keep_aux = false);

struct EnsembleDensity {
    std::vector<double> times;
    std::vector<Matrix> rho;                 // mean dyad per retained point
    std::vector<Eigen::MatrixXd> std_error;  // per-element std error of the mean
    int trajectories = 0;
};

// Mean of the same-realization dyads |psi^(0)><psi^(0)| in fixed seed order.
EnsembleDensity ensemble_density(std::span<const Trajectory> trajectories);

// Propagates every seed (optionally on several threads) and accumulates the
// ensemble in fixed blocks of consecutive seeds, so the result is bit-stable
// for any worker count. Retains every output_stride-th grid point.
EnsembleDensity run_ensemble(const HopsRun& run, std::span<const std::uint64_t> seeds,
                             int threads = 1, int output_stride = 1);

} // namespace hqd::hops
