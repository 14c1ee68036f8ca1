#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "hqd/hops.hpp"
#include "hqd/master.hpp"
#include "test_helpers.hpp"

using namespace hqd;
using bcf::Mode;
using hops::HopsRun;

namespace {

HopsRun dephasing_run() {
    HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = Matrix::Zero(2, 2);
    run.spec.couplings = {test::sigma_z()};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{0.4, Complex(0.8, 0.9)}};
    run.grid = {0.0, 3.0, 300};
    run.truncation = idx::Truncation::by_depth(6);
    Vector psi0(2);
    psi0 << std::sqrt(0.5), std::sqrt(0.5);
    run.psi0 = psi0;
    return run;
}

} // namespace

TEST_CASE("single-coupling rhs example: the first auxiliary is fed by g psi0") {
    HopsRun run;
    run.spec.dim = 1;
    run.spec.hamiltonian = Matrix::Zero(1, 1);
    run.spec.couplings = {Matrix::Ones(1, 1)};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{1.0, 1.0}};
    run.truncation = idx::Truncation::by_depth(3);
    run.psi0 = Vector::Ones(1);

    hops::HopsState state;
    state.space = std::make_shared<idx::IndexSpace>(
        idx::build_index_space(1, Statistics::Bosonic, idx::Truncation::by_depth(3)));
    state.vectors.assign(4, Vector::Zero(1));
    state.vectors[0](0) = 1.0; // psi^(0) = 1
    const std::vector<Complex> zbar{0.0};
    const auto rhs = hops::hops_rhs(state, 0.0, zbar, run);
    CHECK(std::abs(rhs.vectors[1](0) - Complex(1.0)) < 1e-15); // k_j g L psi^(0)
    CHECK(std::abs(rhs.vectors[0](0)) < 1e-15);                 // -L^dag psi^(1) with psi^(1)=0
    CHECK(std::abs(rhs.vectors[2](0)) < 1e-15);
}

TEST_CASE("zero coupling keeps trajectories unitary and auxiliaries empty") {
    std::mt19937_64 rng(31);
    HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = test::random_hermitian(2, rng);
    run.spec.couplings = {Matrix::Zero(2, 2)};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{0.5, Complex(1.0, 0.4)}};
    run.grid = {0.0, 4.0, 400};
    run.truncation = idx::Truncation::by_depth(4);
    run.psi0 = test::excited_state();
    const auto traj = hops::propagate_trajectory(run, 99, true);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        CHECK(std::abs(traj.system_state[i].norm() - 1.0) < 1e-9);
        for (std::size_t p = 1; p < traj.aux[i].size(); ++p)
            CHECK(traj.aux[i][p].cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("identical seeds give bit-identical trajectories") {
    auto run = dephasing_run();
    const auto a = hops::propagate_trajectory(run, 1234);
    const auto b = hops::propagate_trajectory(run, 1234);
    for (std::size_t i = 0; i < a.system_state.size(); ++i)
        CHECK((a.system_state[i] - b.system_state[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure dephasing trajectories factor into independent scalar hierarchies") {
    auto run = dephasing_run();
    const auto traj = hops::propagate_trajectory(run, 77);

    // Independent oracle: per system component, propagate the scalar closed
    // hierarchy dx^k = (-k w + s Zbar) x^k + k g s x^{k-1} - s x^{k+1} with a
    // plain fixed-step RK4 on the same sampled noise.
    const Mode mode = run.modes[0];
    auto path = noise::sample(std::span(&mode, 1), run.grid, 0, 77);
    const noise::CubicInterpolant interp(run.grid, std::move(path.values));
    const int depth = 6;
    for (double s : {1.0, -1.0}) {
        std::vector<Complex> x(depth + 1, 0.0);
        x[0] = 1.0;
        auto deriv = [&](double t, const std::vector<Complex>& v) {
            std::vector<Complex> d(depth + 1, 0.0);
            const Complex zbar = std::conj(interp(t));
            for (int k = 0; k <= depth; ++k) {
                d[k] = (-static_cast<double>(k) * mode.w + s * zbar) * v[k];
                if (k > 0) d[k] += static_cast<double>(k) * mode.g * s * v[k - 1];
                if (k < depth) d[k] -= s * v[k + 1];
            }
            return d;
        };
        const double dt = run.grid.dt();
        const int component = s > 0 ? 0 : 1;
        for (int i = 0; i < run.grid.steps; ++i) {
            const double t = run.grid.time(i);
            auto k1 = deriv(t, x);
            std::vector<Complex> tmp(depth + 1);
            for (int k = 0; k <= depth; ++k) tmp[k] = x[k] + 0.5 * dt * k1[k];
            auto k2 = deriv(t + 0.5 * dt, tmp);
            for (int k = 0; k <= depth; ++k) tmp[k] = x[k] + 0.5 * dt * k2[k];
            auto k3 = deriv(t + 0.5 * dt, tmp);
            for (int k = 0; k <= depth; ++k) tmp[k] = x[k] + dt * k3[k];
            auto k4 = deriv(t + dt, tmp);
            for (int k = 0; k <= depth; ++k)
                x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        // Component evolves by the scalar factor x^0(t) relative to psi0.
        const Complex ratio = traj.system_state.back()(component) / run.psi0(component);
        CHECK(std::abs(ratio - x[0]) < 1e-9);
    }
}

TEST_CASE("ensemble density is Hermitian with trace fluctuating around one") {
    auto run = dephasing_run();
    run.grid = {0.0, 2.0, 200};
    std::vector<std::uint64_t> seeds(400);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 5000 + i;
    const auto ens = hops::run_ensemble(run, seeds, 1, 50);
    REQUIRE(ens.times.size() == 5);
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
        CHECK(test::max_abs_diff(ens.rho[i], ens.rho[i].adjoint()) < 1e-14);
        const double se_scale = ens.std_error[i].maxCoeff();
        CHECK(std::abs(ens.rho[i].trace().real() - 1.0) <= 10.0 * se_scale + 1e-9);
        Eigen::SelfAdjointEigenSolver<Matrix> es(ens.rho[i]);
        CHECK(es.eigenvalues().minCoeff() >= -5.0 * se_scale);
    }
}

TEST_CASE("ensemble reduction is independent of the worker count and API") {
    auto run = dephasing_run();
    run.grid = {0.0, 1.0, 100};
    std::vector<std::uint64_t> seeds(130);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 100 + i;
    const auto serial = hops::run_ensemble(run, seeds, 1, 20);
    const auto parallel = hops::run_ensemble(run, seeds, 3, 20);
    REQUIRE(serial.times.size() == parallel.times.size());
    for (std::size_t i = 0; i < serial.times.size(); ++i) {
        CHECK((serial.rho[i] - parallel.rho[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((serial.std_error[i] - parallel.std_error[i]).cwiseAbs().maxCoeff() == 0.0);
    }

    // ensemble_density over explicitly propagated trajectories agrees.
    std::vector<hops::Trajectory> trajectories;
    for (std::size_t i = 0; i < 40; ++i)
        trajectories.push_back(hops::propagate_trajectory(run, seeds[i]));
    const auto direct = hops::ensemble_density(trajectories);
    const auto blocked = hops::run_ensemble(run, std::span(seeds.data(), 40), 2, 1);
    for (std::size_t i = 0; i < direct.times.size(); ++i)
        CHECK(test::max_abs_diff(direct.rho[i], blocked.rho[i]) < 1e-13);
}

TEST_CASE("ensemble mean matches the deterministic master hierarchy within 3 SE") {
    HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = 0.55 * test::sigma_z() + 0.2 * test::sigma_x();
    run.spec.couplings = {test::sigma_minus()};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{0.5, Complex(0.6, 1.0)}};
    run.grid = {0.0, 3.0, 300};
    run.truncation = idx::Truncation::by_depth(6);
    run.psi0 = test::excited_state();

    std::vector<std::uint64_t> seeds(3000);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 777 + i;
    const auto ens = hops::run_ensemble(run, seeds, 2, 60);

    master::MasterRun mrun;
    mrun.spec = run.spec;
    mrun.modes = run.modes;
    mrun.grid = run.grid;
    mrun.truncation = run.truncation;
    mrun.psi0 = run.psi0;
    mrun.output_stride = 60;
    const auto ref = master::propagate_master(mrun);
    REQUIRE(ref.times.size() == ens.times.size());

    for (std::size_t i = 1; i < ens.times.size(); ++i) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double dev = std::abs(ens.rho[i](a, b) - ref.rho[i](a, b));
                CHECK(dev <= 3.0 * ens.std_error[i](a, b) + 1e-12);
            }
    }
}

TEST_CASE("terminator closure stays finite and changes the truncated solution") {
    // sigma_z coupling fills every hierarchy depth (no excitation bound).
    HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = 0.4 * test::sigma_x() + 0.3 * test::sigma_z();
    run.spec.couplings = {test::sigma_z()};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{0.9, Complex(1.2, 0.8)}};
    run.grid = {0.0, 2.0, 200};
    run.truncation = idx::Truncation::by_depth(2);
    run.psi0 = test::excited_state();

    const auto off = hops::propagate_trajectory(run, 7);
    run.terminator = true;
    const auto on = hops::propagate_trajectory(run, 7);
    double diff = 0.0;
    for (std::size_t i = 0; i < on.system_state.size(); ++i) {
        CHECK(on.system_state[i].allFinite());
        diff = std::max(diff, (on.system_state[i] - off.system_state[i]).cwiseAbs().maxCoeff());
    }
    CHECK(diff > 0.0);

    // On this damped model the closure should track the deep hierarchy better
    // than plain truncation at the same depth.
    run.terminator = false;
    run.truncation = idx::Truncation::by_depth(9);
    const auto deep = hops::propagate_trajectory(run, 7);
    double err_on = 0.0, err_off = 0.0;
    for (std::size_t i = 0; i < on.system_state.size(); ++i) {
        err_on = std::max(err_on,
                          (on.system_state[i] - deep.system_state[i]).cwiseAbs().maxCoeff());
        err_off = std::max(err_off,
                           (off.system_state[i] - deep.system_state[i]).cwiseAbs().maxCoeff());
    }
    CHECK(err_on < err_off);
}

TEST_CASE("deepening the truncation is Cauchy-convergent per trajectory") {
    HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = 0.4 * test::sigma_x() + 0.3 * test::sigma_z();
    run.spec.couplings = {test::sigma_z()};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {Mode{0.6, Complex(0.9, 0.7)}};
    run.grid = {0.0, 2.0, 200};
    run.psi0 = test::excited_state();

    std::vector<std::vector<Vector>> by_depth;
    for (int depth : {2, 4, 6, 8}) {
        run.truncation = idx::Truncation::by_depth(depth);
        by_depth.push_back(hops::propagate_trajectory(run, 11).system_state);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d + 1 < by_depth.size(); ++d) {
        double diff = 0.0;
        for (std::size_t i = 0; i < by_depth[d].size(); ++i)
            diff = std::max(diff,
                            (by_depth[d][i] - by_depth[d + 1][i]).cwiseAbs().maxCoeff());
        CHECK(diff < prev);
        prev = diff;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("ensembles need at least two trajectories") {
    auto run = dephasing_run();
    const std::vector<std::uint64_t> seeds{1};
    CHECK_THROWS_WITH_AS(hops::run_ensemble(run, seeds, 1, 1),
                         doctest::Contains("InsufficientTrajectories"), Error);
}

TEST_CASE("the stochastic hierarchy rejects fermionic statistics") {
    auto run = dephasing_run();
    run.spec.statistics = Statistics::Fermionic;
    CHECK_THROWS_WITH_AS(hops::propagate_trajectory(run, 1),
                         doctest::Contains("IncompatibleSolver"), Error);
}
