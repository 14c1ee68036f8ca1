#include <doctest.h>

#include "hqd/integrate.hpp"
#include "test_helpers.hpp"

using namespace hqd;

TEST_CASE("zero rhs keeps the state constant") {
    Vector y0(3);
    y0 << Complex(1, 2), Complex(-0.5, 0.25), Complex(0, -3);
    auto rhs = [](double, const Vector&, Vector& dy) { dy.setZero(); };
    for (Method method : {Method::RK4, Method::RKF45}) {
        const auto series = integrate(rhs, y0, {0.0, 2.0, 17}, method, 1e-10);
        REQUIRE(series.size() == 18);
        for (const auto& y : series) CHECK((y - y0).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("exponential decay reaches e^{-1} with RK4 at 1000 steps") {
    Vector y0(1);
    y0 << 1.0;
    auto rhs = [](double, const Vector& y, Vector& dy) { dy = -y; };
    const auto series = integrate(rhs, y0, {0.0, 1.0, 1000}, Method::RK4);
    CHECK(std::abs(series.back()(0) - std::exp(-1.0)) < 1e-10);
}

TEST_CASE("unitary flow conserves the norm and matches the matrix exponential") {
    std::mt19937_64 rng(7);
    const Matrix h = test::random_hermitian(4, rng);
    Vector y0(4);
    y0 << 0.5, Complex(0, 0.5), -0.5, Complex(0.5, 0);
    auto rhs = [&](double, const Vector& y, Vector& dy) { dy = -I * (h * y); };
    const TimeGrid grid{0.0, 3.0, 600};

    for (Method method : {Method::RK4, Method::RKF45}) {
        const auto series = integrate(rhs, y0, grid, method, 1e-11);
        for (int i = 0; i <= grid.steps; ++i) {
            CHECK(std::abs(series[i].norm() - y0.norm()) < 1e-9);
        }
        const Matrix u = test::expm((-I * grid.t1 * h).eval());
        CHECK((series.back() - u * y0).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("RK4 step equals the degree-4 Taylor polynomial for linear systems") {
    std::mt19937_64 rng(11);
    const Matrix a = test::random_matrix(2, rng);
    Vector y0(2);
    y0 << Complex(0.3, -0.1), Complex(-1.0, 0.7);
    const double dt = 0.05;
    auto rhs = [&](double, const Vector& y, Vector& dy) { dy = a * y; };
    const auto series = integrate(rhs, y0, {0.0, dt, 1}, Method::RK4);

    Matrix taylor = Matrix::Identity(2, 2);
    Matrix powk = Matrix::Identity(2, 2);
    double fact = 1.0;
    for (int k = 1; k <= 4; ++k) {
        powk = (powk * (dt * a)).eval();
        fact *= k;
        taylor += powk / fact;
    }
    CHECK((series.back() - taylor * y0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("integration is deterministic") {
    std::mt19937_64 rng(3);
    const Matrix a = test::random_matrix(3, rng);
    Vector y0(3);
    y0 << 1.0, Complex(0, 1), -0.25;
    auto rhs = [&](double t, const Vector& y, Vector& dy) { dy = std::cos(t) * (a * y); };
    for (Method method : {Method::RK4, Method::RKF45}) {
        const auto s1 = integrate(rhs, y0, {0.0, 1.0, 50}, method, 1e-9);
        const auto s2 = integrate(rhs, y0, {0.0, 1.0, 50}, method, 1e-9);
        for (std::size_t i = 0; i < s1.size(); ++i)
            CHECK((s1[i] - s2[i]).cwiseAbs().maxCoeff() == 0.0); // bit-identical
    }
}

TEST_CASE("RKF45 meets the local tolerance on a stiff-ish linear problem") {
    Vector y0(1);
    y0 << 1.0;
    const Complex lambda(-40.0, 25.0);
    auto rhs = [&](double, const Vector& y, Vector& dy) { dy = lambda * y; };
    const TimeGrid grid{0.0, 1.0, 10};
    const auto series = integrate(rhs, y0, grid, Method::RKF45, 1e-10);
    for (int i = 0; i <= grid.steps; ++i) {
        const Complex expected = std::exp(lambda * grid.time(i));
        CHECK(std::abs(series[i](0) - expected) < 1e-7);
    }
}

TEST_CASE("step underflow is reported") {
    Vector y0(1);
    y0 << 1.0;
    auto rhs = [](double, const Vector& y, Vector& dy) { dy = 1e16 * y; };
    CHECK_THROWS_WITH_AS(integrate(rhs, y0, {0.0, 1.0, 1}, Method::RKF45, 1e-9),
                         doctest::Contains("StepUnderflow"), Error);
}

TEST_CASE("non-finite states are reported") {
    Vector y0(1);
    y0 << 1.0;
    auto rhs = [](double t, const Vector& y, Vector& dy) {
        dy = (t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0) * y;
    };
    CHECK_THROWS_AS(integrate(rhs, y0, {0.0, 1.0, 10}, Method::RK4), Error);
}
