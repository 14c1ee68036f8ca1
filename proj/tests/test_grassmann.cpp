#include <doctest.h>

#include <random>

#include "hqd/grassmann.hpp"
#include "hqd/master.hpp"
#include "test_helpers.hpp"

using namespace hqd;
namespace g = hqd::grassmann;

namespace {

g::GrassmannElement<Complex> generator(const g::GrassmannAlgebra& algebra, int gen) {
    auto e = g::make_element<Complex>(algebra, Complex(0.0));
    e.coeffs[1u << gen] = 1.0;
    return e;
}

g::GrassmannElement<Complex> scalar_one(const g::GrassmannAlgebra& algebra) {
    auto e = g::make_element<Complex>(algebra, Complex(0.0));
    e.coeffs[0] = 1.0;
    return e;
}

g::GrassmannElement<Complex> random_scalar_element(const g::GrassmannAlgebra& algebra,
                                                   std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto e = g::make_element<Complex>(algebra, Complex(0.0));
    for (auto& c : e.coeffs) c = Complex(normal(rng), normal(rng));
    return e;
}

double max_abs(const g::GrassmannElement<Complex>& e) {
    double m = 0.0;
    for (const auto& c : e.coeffs) m = std::max(m, std::abs(c));
    return m;
}

} // namespace

TEST_CASE("product rules") {
    const g::GrassmannAlgebra algebra(4);
    const auto z0 = generator(algebra, 0);
    const auto z1 = generator(algebra, 1);

    SUBCASE("nilpotency") { CHECK(max_abs(g::g_mul(z0, z0)) == 0.0); }
    SUBCASE("anticommutation") {
        auto ab = g::g_mul(z0, z1);
        const auto ba = g::g_mul(z1, z0);
        for (std::size_t m = 0; m < ab.coeffs.size(); ++m) ab.coeffs[m] += ba.coeffs[m];
        CHECK(max_abs(ab) == 0.0);
    }
    SUBCASE("(1 + z0)(1 - z0) = 1") {
        auto plus = scalar_one(algebra);
        plus.coeffs[1] = 1.0;
        auto minus = scalar_one(algebra);
        minus.coeffs[1] = -1.0;
        auto prod = g::g_mul(plus, minus);
        CHECK(std::abs(prod.coeffs[0] - Complex(1.0)) == 0.0);
        prod.coeffs[0] = 0.0;
        CHECK(max_abs(prod) == 0.0);
    }
    SUBCASE("associativity and distributivity on random elements") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = random_scalar_element(algebra, rng);
            const auto b = random_scalar_element(algebra, rng);
            const auto c = random_scalar_element(algebra, rng);
            auto lhs = g::g_mul(g::g_mul(a, b), c);
            const auto rhs = g::g_mul(a, g::g_mul(b, c));
            for (std::size_t m = 0; m < lhs.coeffs.size(); ++m) lhs.coeffs[m] -= rhs.coeffs[m];
            CHECK(max_abs(lhs) < 1e-13 * 64.0);

            auto sum = a;
            for (std::size_t m = 0; m < sum.coeffs.size(); ++m) sum.coeffs[m] += b.coeffs[m];
            auto left = g::g_mul(sum, c);
            const auto ac = g::g_mul(a, c);
            const auto bc = g::g_mul(b, c);
            for (std::size_t m = 0; m < left.coeffs.size(); ++m)
                left.coeffs[m] -= ac.coeffs[m] + bc.coeffs[m];
            CHECK(max_abs(left) < 1e-13 * 64.0);
        }
    }
    SUBCASE("algebra mismatch is rejected") {
        const g::GrassmannAlgebra other(6);
        CHECK_THROWS_WITH_AS(g::g_mul(z0, generator(other, 0)),
                             doctest::Contains("AlgebraMismatch"), Error);
    }
}

TEST_CASE("Berezin derivatives") {
    const g::GrassmannAlgebra algebra(4);
    auto z01 = g::g_mul(generator(algebra, 0), generator(algebra, 1)); // z0 z1

    SUBCASE("left derivative removes the leading generator") {
        const auto d = g::g_deriv(z01, 0, g::Side::Left);
        CHECK(std::abs(d.coeffs[1u << 1] - Complex(1.0)) == 0.0);
    }
    SUBCASE("right derivative picks up the crossing sign") {
        const auto d = g::g_deriv(z01, 0, g::Side::Right);
        CHECK(std::abs(d.coeffs[1u << 1] + Complex(1.0)) == 0.0); // -z1
    }
    SUBCASE("derivative of a constant vanishes") {
        const auto d = g::g_deriv(scalar_one(algebra), 2, g::Side::Left);
        CHECK(max_abs(d) == 0.0);
    }
    SUBCASE("{d_i, z_j .} = delta_ij as operators") {
        std::mt19937_64 rng(23);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const auto x = random_scalar_element(algebra, rng);
                const auto zj = generator(algebra, j);
                auto anti = g::g_deriv(g::g_mul(zj, x), i, g::Side::Left);
                const auto second = g::g_mul(zj, g::g_deriv(x, i, g::Side::Left));
                for (std::size_t m = 0; m < anti.coeffs.size(); ++m)
                    anti.coeffs[m] += second.coeffs[m] - (i == j ? x.coeffs[m] : Complex(0.0));
                CHECK(max_abs(anti) < 1e-14 * 16.0);
            }
        }
    }
}

TEST_CASE("involution is an anti-automorphism and an involution") {
    const g::GrassmannAlgebra algebra(4);
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_scalar_element(algebra, rng);
        const auto b = random_scalar_element(algebra, rng);
        auto lhs = g::involution(g::g_mul(a, b));
        const auto rhs = g::g_mul(g::involution(b), g::involution(a));
        for (std::size_t m = 0; m < lhs.coeffs.size(); ++m) lhs.coeffs[m] -= rhs.coeffs[m];
        CHECK(max_abs(lhs) < 1e-13 * 16.0);

        auto twice = g::involution(g::involution(a));
        for (std::size_t m = 0; m < twice.coeffs.size(); ++m) twice.coeffs[m] -= a.coeffs[m];
        CHECK(max_abs(twice) == 0.0);
    }
}

TEST_CASE("Gaussian expectation") {
    const g::GrassmannAlgebra algebra(4); // two pairs (z_0, zbar_0), (z_1, zbar_1)
    SUBCASE("normalization") {
        CHECK(std::abs(g::gaussian_expect(scalar_one(algebra)) - Complex(1.0)) == 0.0);
    }
    SUBCASE("E[z_l zbar_l'] = delta") {
        for (int l = 0; l < 2; ++l) {
            for (int lp = 0; lp < 2; ++lp) {
                const auto prod = g::g_mul(generator(algebra, 2 * l), generator(algebra, 2 * lp + 1));
                const Complex expected = l == lp ? 1.0 : 0.0;
                CHECK(std::abs(g::gaussian_expect(prod) - expected) < 1e-15);
            }
        }
    }
    SUBCASE("odd elements average to zero") {
        std::mt19937_64 rng(31);
        auto odd = g::make_element<Complex>(algebra, Complex(0.0));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::uint32_t m = 0; m < odd.coeffs.size(); ++m)
            if (std::popcount(m) % 2 == 1) odd.coeffs[m] = Complex(normal(rng), normal(rng));
        CHECK(std::abs(g::gaussian_expect(odd)) == 0.0);
    }
    SUBCASE("discrete-bath process correlation reproduces the BCF") {
        // Z(t) built on two modes; E[Z(t) Zbar(s)] must equal the mode sum.
        const std::vector<Complex> gs{Complex(0.4, 0.2), Complex(-0.3, 0.5)};
        const std::vector<double> ws{0.9, -1.4};
        auto z_at = [&](double t) {
            auto e = g::make_element<Complex>(algebra, Complex(0.0));
            for (int l = 0; l < 2; ++l)
                e.coeffs[1u << (2 * l)] = I * gs[l] * std::exp(-I * ws[l] * t);
            return e;
        };
        auto zbar_at = [&](double s) {
            auto e = g::make_element<Complex>(algebra, Complex(0.0));
            for (int l = 0; l < 2; ++l)
                e.coeffs[1u << (2 * l + 1)] = -I * std::conj(gs[l]) * std::exp(I * ws[l] * s);
            return e;
        };
        const auto modes = bcf::discrete_bath_modes(gs, ws);
        for (double t : {0.0, 0.7}) {
            for (double s : {0.0, 0.4}) {
                const Complex lhs = g::gaussian_expect(g::g_mul(z_at(t), zbar_at(s)));
                const double tau = t - s;
                const Complex expected = tau >= 0
                                             ? bcf::eval_modes(modes, tau)
                                             : std::conj(bcf::eval_modes(modes, -tau));
                CHECK(std::abs(lhs - expected) < 1e-12);
            }
        }
    }
    SUBCASE("unpaired generators are rejected") {
        const g::GrassmannAlgebra odd_algebra(3);
        CHECK_THROWS_WITH_AS(g::gaussian_expect(scalar_one(odd_algebra)),
                             doctest::Contains("UnpairedGenerators"), Error);
    }
}

TEST_CASE("hierarchy propagation basics") {
    std::mt19937_64 rng(37);
    SystemSpec spec;
    spec.dim = 2;
    spec.hamiltonian = test::random_hermitian(2, rng);
    spec.couplings = {test::sigma_minus()};
    spec.statistics = Statistics::Fermionic;

    SUBCASE("zero coupling: bare state in the empty monomial") {
        oracle::DiscreteBathSpec bath;
        bath.statistics = Statistics::Fermionic;
        bath.channels = {{{1.0}, {0.0}}};
        const TimeGrid grid{0.0, 2.0, 400};
        const auto res =
            g::propagate_pure_fermionic(spec, bath, grid, test::excited_state(), false);
        const Matrix u = test::expm((-I * grid.t1 * spec.hamiltonian).eval());
        const Vector expected = u * test::excited_state();
        const auto& psi0_elem = res.psi.back()[0];
        CHECK((psi0_elem.coeffs[0] - expected).cwiseAbs().maxCoeff() < 1e-9);
        for (std::size_t m = 1; m < psi0_elem.coeffs.size(); ++m)
            CHECK(psi0_elem.coeffs[m].cwiseAbs().maxCoeff() == 0.0);
        for (std::size_t p = 1; p < res.psi.back().size(); ++p)
            for (const auto& c : res.psi.back()[p].coeffs)
                CHECK(c.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("first-order growth of the first auxiliary state") {
        oracle::DiscreteBathSpec bath;
        bath.statistics = Statistics::Fermionic;
        bath.channels = {{{0.8}, {Complex(0.3, 0.1)}}};
        const double t_small = 1e-3;
        const TimeGrid grid{0.0, t_small, 4};
        const auto res =
            g::propagate_pure_fermionic(spec, bath, grid, test::excited_state(), false);
        // d psi^(e_1)/dt at t=0 is s_partial g L psi0 on the empty monomial;
        // the tolerance leaves room for the second Dyson order ~ t^2 / 2.
        const Vector expected = t_small * std::norm(Complex(0.3, 0.1)) *
                                (test::sigma_minus() * test::excited_state());
        const auto& aux = res.psi.back()[1];
        CHECK((aux.coeffs[0] - expected).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((aux.coeffs[0] - expected).cwiseAbs().maxCoeff() < 5e-3 * expected.norm());
    }

    SUBCASE("parity bookkeeping: monomial degree tracks the state sector and |k|") {
        // With L = sigma_minus the total excitation number is conserved, so
        // the bath monomial degree of system component a inside psi^(k) has
        // parity (a + |k|) mod 2: one bath quantum per system de-excitation,
        // minus one per derivation-operator application.
        SystemSpec exchange = spec;
        Matrix h(2, 2);
        h << 1.2, 0, 0, 0;
        exchange.hamiltonian = h;
        oracle::DiscreteBathSpec bath;
        bath.statistics = Statistics::Fermionic;
        bath.channels = {{{0.8, -0.3}, {Complex(0.3, 0.1), 0.2}}};
        const TimeGrid grid{0.0, 1.5, 150};
        const auto res =
            g::propagate_pure_fermionic(exchange, bath, grid, test::excited_state(), false);
        for (const auto& states : res.psi) {
            for (int p = 0; p < res.space->size(); ++p) {
                int total = 0;
                for (int v : res.space->index(p)) total += v;
                for (std::uint32_t m = 0; m < states[p].coeffs.size(); ++m) {
                    for (int a = 0; a < 2; ++a) {
                        if (std::abs(states[p].coeffs[m](a)) > 1e-12)
                            CHECK(std::popcount(m) % 2 == (a + total) % 2);
                    }
                }
            }
        }
    }
}

TEST_CASE("reduced density from the Grassmann ensemble formula") {
    std::mt19937_64 rng(41);
    SystemSpec spec;
    spec.dim = 2;
    spec.hamiltonian = test::random_hermitian(2, rng);
    spec.couplings = {test::sigma_minus()};
    spec.statistics = Statistics::Fermionic;

    SUBCASE("t = 0 recovers the initial dyad; zero coupling stays unitary") {
        oracle::DiscreteBathSpec bath;
        bath.statistics = Statistics::Fermionic;
        bath.channels = {{{1.3}, {0.0}}};
        const TimeGrid grid{0.0, 1.0, 200};
        Vector psi0(2);
        psi0 << std::sqrt(0.3), Complex(0.0, 1.0) * std::sqrt(0.7);
        const auto res = g::propagate_pure_fermionic(spec, bath, grid, psi0, true);
        const Matrix rho0 = g::reduced_density_grassmann(res.psi.front(), res.psi_tilde.front());
        CHECK(test::max_abs_diff(rho0, psi0 * psi0.adjoint()) < 1e-14);

        const Matrix u = test::expm((-I * grid.t1 * spec.hamiltonian).eval());
        const Matrix rho1 = g::reduced_density_grassmann(res.psi.back(), res.psi_tilde.back());
        CHECK(test::max_abs_diff(rho1, u * (psi0 * psi0.adjoint()) * u.adjoint()) < 1e-9);
    }

    SUBCASE("resonant exchange: excited population follows cos^2(|g| t)") {
        const double eps = 1.1;
        Matrix h(2, 2);
        h << eps, 0, 0, 0;
        spec.hamiltonian = h;
        oracle::DiscreteBathSpec bath;
        bath.statistics = Statistics::Fermionic;
        bath.channels = {{{eps}, {Complex(0.3, 0.2)}}};
        const TimeGrid grid{0.0, 5.0, 500};
        const auto res =
            g::propagate_pure_fermionic(spec, bath, grid, test::excited_state(), true, Method::RK4,
                                        1e-9, 100);
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            const Matrix rho = g::reduced_density_grassmann(res.psi[i], res.psi_tilde[i]);
            const double expected = std::pow(std::cos(std::abs(Complex(0.3, 0.2)) * res.times[i]), 2);
            CHECK(std::abs(rho(0, 0).real() - expected) < 1e-7);
        }
    }
}

TEST_CASE("Grassmann propagation matches the fermionic master hierarchy on every auxiliary") {
    std::mt19937_64 rng(43);
    SystemSpec spec;
    spec.dim = 2;
    spec.hamiltonian = test::random_hermitian(2, rng);
    spec.couplings = {test::sigma_minus(), test::random_matrix(2, rng, 0.3)};
    spec.statistics = Statistics::Fermionic;

    oracle::DiscreteBathSpec bath;
    bath.statistics = Statistics::Fermionic;
    bath.channels = {{{0.9, -0.5}, {Complex(0.35, 0.0), Complex(0.2, 0.1)}},
                     {{0.4}, {Complex(0.0, 0.25)}}};

    const TimeGrid grid{0.0, 2.0, 1000};
    const Vector psi0 = test::excited_state();
    const int stride = 200;
    const auto res = g::propagate_pure_fermionic(spec, bath, grid, psi0, true, Method::RK4, 1e-9,
                                                 stride);

    // The same physics through the deterministic density hierarchy, with the
    // per-mode channel expansion and the full paired index space.
    master::MasterRun run;
    run.spec = spec;
    run.spec.couplings = {spec.couplings[0], spec.couplings[0], spec.couplings[1]};
    run.modes = res.modes;
    run.grid = grid;
    run.truncation = idx::Truncation::full();
    run.psi0 = psi0;
    run.keep_aux = true;
    run.output_stride = stride;
    const auto ref = master::propagate_master(run);
    REQUIRE(ref.times.size() == res.times.size());

    const int channels = 3;
    const auto pair_space = master::build_pair_space(run);
    double dev = 0.0;
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        for (int p = 0; p < pair_space->size(); ++p) {
            const auto& mn = pair_space->index(p);
            const idx::MultiIndex m(mn.begin(), mn.begin() + channels);
            const idx::MultiIndex n(mn.begin() + channels, mn.end());
            const int pos_m = res.space->position_of(m);
            const int pos_n = res.space->position_of(n);
            REQUIRE(pos_m >= 0);
            REQUIRE(pos_n >= 0);
            const Matrix via_grassmann =
                g::aux_density_grassmann(res.psi[i][pos_m], res.psi_tilde[i][pos_n]);
            dev = std::max(dev, test::max_abs_diff(via_grassmann, ref.aux[i][p]));
        }
    }
    CHECK(dev < 1e-8);
}

TEST_CASE("states with k_j = 2 stay zero under the untruncated recursion") {
    // The pre-closure equation carries (k_j mod 2) on the downward coupling;
    // in an extended space with k <= 2 the illegal states must never fill.
    const g::GrassmannAlgebra algebra(2); // one mode: z, zbar
    const Complex g_raw = 0.32;           // microscopic coupling
    const double w_mode = 0.8;
    const Complex h_scalar = 0.4; // D = 1 system with H = 0.4, L = 1
    const int depth = 2;

    std::vector<g::GrassmannElement<Complex>> x;
    for (int k = 0; k <= depth; ++k) x.push_back(g::make_element<Complex>(algebra, Complex(0.0)));
    x[0].coeffs[0] = 1.0;

    auto deriv = [&](double t, const std::vector<g::GrassmannElement<Complex>>& v) {
        std::vector<g::GrassmannElement<Complex>> d;
        auto zbar = g::make_element<Complex>(algebra, Complex(0.0));
        zbar.coeffs[2] = -I * std::conj(g_raw) * std::exp(I * w_mode * t);
        for (int k = 0; k <= depth; ++k) {
            auto out = g::make_element<Complex>(algebra, Complex(0.0));
            const double sign_total = (k % 2 == 0) ? 1.0 : -1.0;
            for (std::uint32_t m = 0; m < out.coeffs.size(); ++m)
                out.coeffs[m] = (-I * h_scalar - static_cast<double>(k) * Complex(0.0, w_mode)) *
                                v[k].coeffs[m];
            auto noise = g::g_mul(zbar, v[k]);
            for (std::uint32_t m = 0; m < out.coeffs.size(); ++m)
                out.coeffs[m] += sign_total * noise.coeffs[m];
            if (k > 0 && (k % 2 == 1)) // (k_j mod 2) kills the k = 2 feed
                for (std::uint32_t m = 0; m < out.coeffs.size(); ++m)
                    out.coeffs[m] += std::norm(g_raw) * v[k - 1].coeffs[m];
            if (k < depth)
                for (std::uint32_t m = 0; m < out.coeffs.size(); ++m)
                    out.coeffs[m] -= v[k + 1].coeffs[m];
            d.push_back(std::move(out));
        }
        return d;
    };

    const double dt = 1e-3;
    for (int step = 0; step < 1000; ++step) {
        const double t = step * dt;
        auto add = [&](const std::vector<g::GrassmannElement<Complex>>& a, double factor,
                       const std::vector<g::GrassmannElement<Complex>>& b) {
            auto out = a;
            for (int k = 0; k <= depth; ++k)
                for (std::uint32_t m = 0; m < out[k].coeffs.size(); ++m)
                    out[k].coeffs[m] += factor * b[k].coeffs[m];
            return out;
        };
        const auto k1 = deriv(t, x);
        const auto k2 = deriv(t + dt / 2, add(x, dt / 2, k1));
        const auto k3 = deriv(t + dt / 2, add(x, dt / 2, k2));
        const auto k4 = deriv(t + dt, add(x, dt, k3));
        for (int k = 0; k <= depth; ++k)
            for (std::uint32_t m = 0; m < x[k].coeffs.size(); ++m)
                x[k].coeffs[m] += dt / 6.0 *
                                  (k1[k].coeffs[m] + 2.0 * k2[k].coeffs[m] +
                                   2.0 * k3[k].coeffs[m] + k4[k].coeffs[m]);
    }
    CHECK(max_abs(x[0]) > 0.1);  // the physical sector evolved
    CHECK(max_abs(x[1]) > 1e-4);
    CHECK(max_abs(x[2]) < 1e-12); // the illegal state never filled
}

TEST_CASE("identity checks stay at machine precision") {
    const auto reports = g::check_identities(100, 2024);
    REQUIRE(reports.size() == 6);
    for (const auto& r : reports) {
        CAPTURE(r.name);
        CHECK(r.max_residual <= 1e-12);
        CHECK(r.trials == 100);
    }
}

TEST_CASE("generator guard") {
    CHECK_THROWS_WITH_AS(g::GrassmannAlgebra(25), doctest::Contains("TooManyGenerators"), Error);
}
