#include "hqd/oracle.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace hqd::oracle {

int DiscreteBathSpec::total_modes() const {
    int m = 0;
    for (const auto& c : channels) m += static_cast<int>(c.frequencies.size());
    return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

std::vector<Matrix> fermionic_ladders(int modes) {
    require(modes >= 1, Errc::InvalidArgument, "need at least one mode");
    Matrix lower(2, 2), parity(2, 2), id2(2, 2);
    lower << 0, 1, 0, 0;   // |0><1|
    parity << 1, 0, 0, -1; // sigma_z on the occupation basis
    id2.setIdentity();
    std::vector<Matrix> out;
    out.reserve(modes);
    for (int m = 0; m < modes; ++m) {
        Matrix op = Matrix::Ones(1, 1);
        for (int l = 0; l < modes; ++l) {
            if (l < m)
                op = kron(op, parity);
            else if (l == m)
                op = kron(op, lower);
            else
                op = kron(op, id2);
        }
        out.push_back(std::move(op));
    }
    return out;
}

Matrix bosonic_ladder(int n_levels) {
    require(n_levels >= 2, Errc::InvalidArgument, "Fock cutoff needs at least two levels");
    Matrix a = Matrix::Zero(n_levels, n_levels);
    for (int n = 1; n < n_levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

namespace {

struct BathOperators {
    std::vector<Matrix> ladders; // annihilation per mode on the bath space
    std::vector<double> frequencies;
    std::vector<Complex> couplings;
    std::vector<int> channel_of;
    Eigen::Index dim = 0;
};

BathOperators build_bath(const DiscreteBathSpec& bath) {
    BathOperators ops;
    for (std::size_t j = 0; j < bath.channels.size(); ++j) {
        const auto& c = bath.channels[j];
        require(c.frequencies.size() == c.couplings.size(), Errc::LengthMismatch,
                "channel frequencies/couplings length mismatch");
        for (std::size_t l = 0; l < c.frequencies.size(); ++l) {
            ops.frequencies.push_back(c.frequencies[l]);
            ops.couplings.push_back(c.couplings[l]);
            ops.channel_of.push_back(static_cast<int>(j));
        }
    }
    const int m = static_cast<int>(ops.frequencies.size());
    require(m >= 1, Errc::InvalidArgument, "discrete bath without modes");

    if (bath.statistics == Statistics::Fermionic) {
        ops.ladders = fermionic_ladders(m);
        ops.dim = Eigen::Index(1) << m;
    } else {
        const int levels = bath.n_max + 1;
        require(levels >= 2, Errc::InvalidArgument, "bosonic bath needs n_max >= 1");
        const Matrix a = bosonic_ladder(levels);
        const Matrix id = Matrix::Identity(levels, levels);
        ops.dim = 1;
        for (int i = 0; i < m; ++i) ops.dim *= levels;
        for (int mode = 0; mode < m; ++mode) {
            Matrix op = Matrix::Ones(1, 1);
            for (int l = 0; l < m; ++l) op = kron(op, l == mode ? a : id);
            ops.ladders.push_back(std::move(op));
        }
    }
    return ops;
}

void check_dimension(const SystemSpec& spec, const DiscreteBathSpec& bath) {
    const int m = bath.total_modes();
    double total = static_cast<double>(spec.dim);
    if (bath.statistics == Statistics::Fermionic) {
        total *= std::pow(2.0, m);
    } else {
        total *= std::pow(static_cast<double>(bath.n_max + 1), m);
    }
    require(total <= static_cast<double>(1 << 22), Errc::DimensionGuard,
            "total system x bath dimension exceeds the 2^22 guard");
}

} // namespace

Matrix total_hamiltonian(const SystemSpec& spec_in, const DiscreteBathSpec& bath) {
    const SystemSpec spec = validate_system(spec_in);
    require(spec.statistics == bath.statistics, Errc::IncompatibleSolver,
            "system and bath statistics disagree");
    require(bath.channels.size() == spec.couplings.size(), Errc::LengthMismatch,
            "one bath channel per coupling operator required");
    check_dimension(spec, bath);

    const BathOperators ops = build_bath(bath);
    const Eigen::Index d = spec.dim;
    const Matrix id_sys = Matrix::Identity(d, d);
    const Matrix id_bath = Matrix::Identity(ops.dim, ops.dim);

    Matrix h = kron(spec.hamiltonian, id_bath);
    for (std::size_t mode = 0; mode < ops.ladders.size(); ++mode) {
        const Matrix& b = ops.ladders[mode];
        h += ops.frequencies[mode] * kron(id_sys, (b.adjoint() * b).eval());
        const Matrix& l = spec.couplings[ops.channel_of[mode]];
        h += std::conj(ops.couplings[mode]) * kron(l, b.adjoint());
        h += ops.couplings[mode] * kron(l.adjoint(), b);
    }
    return h;
}

OracleResult exact_propagate(const SystemSpec& spec, const DiscreteBathSpec& bath,
                             const TimeGrid& grid_in, const Vector& psi0) {
    const TimeGrid grid = validate_grid(grid_in);
    require(psi0.size() == spec.dim, Errc::DimensionMismatch, "psi0 dimension mismatch");
    const Matrix h = total_hamiltonian(spec, bath);
    const Eigen::Index dim_b = h.rows() / spec.dim;

    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    require(es.info() == Eigen::Success, Errc::EigDecompositionFailed,
            "total Hamiltonian eigendecomposition failed");
    const Vector phases =
        (-I * grid.dt() * es.eigenvalues().cast<Complex>().array()).exp().matrix();
    const Matrix u_dt = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();

    // psi0 (x) vacuum; the vacuum is index 0 for both statistics.
    Vector psi = Vector::Zero(h.rows());
    for (Eigen::Index a = 0; a < spec.dim; ++a) psi(a * dim_b) = psi0(a);

    OracleResult result;
    const int d = static_cast<int>(spec.dim);
    auto record = [&](double t) {
        // Eigen's dot conjugates its first argument, so this accumulates
        // conj(rho_ab) = sum_beta conj(Psi_{a,beta}) Psi_{b,beta}.
        Matrix rho = Matrix::Zero(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                rho(a, b) =
                    psi.segment(a * dim_b, dim_b).dot(psi.segment(b * dim_b, dim_b));
        result.times.push_back(t);
        result.rho.push_back(rho.conjugate());
        result.norm_drift = std::max(result.norm_drift, std::abs(psi.norm() - 1.0));
    };

    record(grid.t0);
    for (int i = 0; i < grid.steps; ++i) {
        psi = u_dt * psi;
        record(grid.time(i + 1));
    }
    return result;
}

OracleResult exact_propagate_bosonic_converged(const SystemSpec& spec, DiscreteBathSpec bath,
                                               const TimeGrid& grid, const Vector& psi0,
                                               double tol, int n_max_limit) {
    require(bath.statistics == Statistics::Bosonic, Errc::IncompatibleSolver,
            "Fock-cutoff convergence applies to bosonic baths");
    OracleResult prev = exact_propagate(spec, bath, grid, psi0);
    while (bath.n_max < n_max_limit) {
        bath.n_max += 1;
        OracleResult next = exact_propagate(spec, bath, grid, psi0);
        double dev = 0.0;
        for (std::size_t i = 0; i < next.rho.size(); ++i)
            dev = std::max(dev, (next.rho[i] - prev.rho[i]).cwiseAbs().maxCoeff());
        if (dev < tol) return next;
        prev = std::move(next);
    }
    fail(Errc::DimensionGuard, "bosonic oracle did not converge within the Fock cutoff limit");
}

std::vector<std::vector<bcf::Mode>> bath_to_modes(const DiscreteBathSpec& bath) {
    std::vector<std::vector<bcf::Mode>> out;
    out.reserve(bath.channels.size());
    for (const auto& c : bath.channels)
        out.push_back(bcf::discrete_bath_modes(c.couplings, c.frequencies));
    return out;
}

} // namespace hqd::oracle
