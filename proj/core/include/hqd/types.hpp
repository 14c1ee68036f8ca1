// types.hpp — shared domain types: system description and time grids

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hqd/errors.hpp"

namespace hqd {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr Complex I{0.0, 1.0};

enum class Statistics { Bosonic, Fermionic };

// System Hamiltonian H and coupling operators L_j, all D x D, with the
// environment statistics that selects which hierarchy applies.
struct SystemSpec {
    Eigen::Index dim = 0;
    Matrix hamiltonian;
    std::vector<Matrix> couplings;
    Statistics statistics = Statistics::Bosonic;

    int channel_count() const { return static_cast<int>(couplings.size()); }
};

// Throws unless H is Hermitian (max element deviation 1e-12), every L_j is
// D x D, and there is at least one coupling. Returns the spec unchanged.
SystemSpec validate_system(SystemSpec spec);

// Uniform grid t0 = t_0 < t_1 < ... < t_steps = t1 with steps+1 points.
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    int steps = 1;

    double dt() const { return (t1 - t0) / steps; }
    double time(int i) const { return t0 + i * dt(); }
    int points() const { return steps + 1; }
    double span() const { return t1 - t0; }
};

TimeGrid validate_grid(TimeGrid grid);

double hermiticity_defect(const Matrix& m);

} // namespace hqd
