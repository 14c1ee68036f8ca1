// Microbenchmarks for the hot paths: hierarchy RHS sweeps, noise synthesis,
// and the Grassmann product kernel.

#include <benchmark/benchmark.h>

#include "hqd/grassmann.hpp"
#include "hqd/hops.hpp"
#include "hqd/master.hpp"
#include "hqd/noise.hpp"

using namespace hqd;

namespace {

Matrix sigma_minus() {
    Matrix m(2, 2);
    m << 0, 0, 1, 0;
    return m;
}

Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

SystemSpec fermionic_spec(int channels) {
    SystemSpec spec;
    spec.dim = 2;
    Matrix h(2, 2);
    h << 0.3, Complex(0.2, 0.1), Complex(0.2, -0.1), -0.3;
    spec.hamiltonian = h;
    for (int j = 0; j < channels; ++j) spec.couplings.push_back(sigma_minus());
    spec.statistics = Statistics::Fermionic;
    return spec;
}

void bench_master_propagation(benchmark::State& state) {
    const int channels = static_cast<int>(state.range(0));
    master::MasterRun run;
    run.spec = fermionic_spec(channels);
    for (int j = 0; j < channels; ++j)
        run.modes.push_back(bcf::Mode{0.2 + 0.05 * j, Complex(0.1 * j, 0.8 + 0.2 * j)});
    run.grid = {0.0, 0.1, 100};
    run.truncation = idx::Truncation::full();
    run.psi0 = Vector::Zero(2);
    run.psi0(0) = 1.0;
    run.output_stride = 100;
    for (auto _ : state) {
        auto res = master::propagate_master(run);
        benchmark::DoNotOptimize(res.rho.back());
    }
    state.counters["aux"] = static_cast<double>(1 << (2 * channels));
    state.counters["rhs_evals"] = 400;
}
BENCHMARK(bench_master_propagation)->Arg(2)->Arg(3)->Arg(4);

void bench_hops_trajectory(benchmark::State& state) {
    hops::HopsRun run;
    run.spec.dim = 2;
    run.spec.hamiltonian = 0.55 * sigma_z();
    run.spec.couplings = {sigma_minus()};
    run.spec.statistics = Statistics::Bosonic;
    run.modes = {bcf::Mode{0.5, Complex(0.6, 1.0)}};
    run.grid = {0.0, 3.0, 300};
    run.truncation = idx::Truncation::by_depth(static_cast<int>(state.range(0)));
    run.psi0 = Vector::Zero(2);
    run.psi0(0) = 1.0;
    std::uint64_t seed = 1;
    for (auto _ : state) {
        auto traj = hops::propagate_trajectory(run, seed++);
        benchmark::DoNotOptimize(traj.system_state.back());
    }
}
BENCHMARK(bench_hops_trajectory)->Arg(4)->Arg(8)->Arg(16);

void bench_noise_sample(benchmark::State& state) {
    const std::vector<bcf::Mode> modes{{0.7, Complex(0.6, -0.9)}};
    const TimeGrid grid{0.0, 4.0, static_cast<int>(state.range(0))};
    std::uint64_t seed = 1;
    for (auto _ : state) {
        auto path = noise::sample(modes, grid, 0, seed++);
        benchmark::DoNotOptimize(path.values.back());
    }
}
BENCHMARK(bench_noise_sample)->Arg(256)->Arg(2048)->Arg(16384);

void bench_grassmann_mul(benchmark::State& state) {
    const grassmann::GrassmannAlgebra algebra(static_cast<int>(state.range(0)));
    auto a = grassmann::make_element<Complex>(algebra, Complex(0.0));
    auto b = grassmann::make_element<Complex>(algebra, Complex(0.0));
    for (std::size_t m = 0; m < a.coeffs.size(); ++m) {
        a.coeffs[m] = Complex(0.1 + m * 1e-3, -0.2);
        b.coeffs[m] = Complex(-0.3, 0.4 - m * 1e-3);
    }
    for (auto _ : state) {
        auto c = grassmann::g_mul(a, b);
        benchmark::DoNotOptimize(c.coeffs[0]);
    }
}
BENCHMARK(bench_grassmann_mul)->Arg(6)->Arg(8)->Arg(10);

} // namespace

BENCHMARK_MAIN();
