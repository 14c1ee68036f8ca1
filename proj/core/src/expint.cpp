#include "hqd/detail/expint.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace hqd::detail {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

// E1(z) = -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!). Cancellation is
// bounded by e^{|z| - |Re z|}, so this route serves the strip |Im z| < 10
// left of the continued fraction's sector.
std::complex<double> e1_series(std::complex<double> z) {
    std::complex<double> sum = 0.0;
    std::complex<double> term = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= -z / static_cast<double>(k);
        const std::complex<double> add = -term / static_cast<double>(k);
        sum += add;
        if (std::abs(add) < 1e-18 * (1.0 + std::abs(sum))) break;
    }
    return -kEulerGamma - std::log(z) + sum;
}

// Modified-Lentz continued fraction, excellent within +-45 degrees of the
// positive real axis: E1(z) = e^{-z} / (z+1- 1/(z+3- 4/(z+5- 9/(...)))).
std::complex<double> e1_continued_fraction(std::complex<double> z) {
    const double tiny = 1e-290;
    std::complex<double> b = z + 1.0;
    std::complex<double> c = 1.0 / tiny;
    std::complex<double> d = 1.0 / b;
    std::complex<double> h = d;
    for (int i = 1; i <= 2000; ++i) {
        const std::complex<double> a = -static_cast<double>(i) * static_cast<double>(i);
        b += 2.0;
        d = a * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const std::complex<double> del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-z) * h;
}

struct LaguerreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub-Welsch nodes/weights for int_0^inf e^{-u} f(u) du.
const LaguerreRule& laguerre_rule() {
    static const LaguerreRule rule = [] {
        const int n = 120;
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            jacobi(k, k) = 2.0 * k + 1.0;
            if (k > 0) {
                jacobi(k, k - 1) = k;
                jacobi(k - 1, k) = k;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
        LaguerreRule out;
        out.nodes.resize(n);
        out.weights.resize(n);
        for (int k = 0; k < n; ++k) {
            out.nodes[k] = es.eigenvalues()[k];
            const double v0 = es.eigenvectors()(0, k);
            out.weights[k] = v0 * v0; // mu_0 = 1
        }
        return out;
    }();
    return rule;
}

// Integral representation along a horizontal ray, valid for Im z != 0:
// E1(z) = e^{-z} int_0^inf e^{-u} / (z + u) du. The integrand's pole sits
// |Im z| away from the contour, so Gauss-Laguerre converges fast once
// |Im z| is moderately large.
std::complex<double> e1_laguerre(std::complex<double> z) {
    const auto& rule = laguerre_rule();
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        acc += rule.weights[k] / (z + rule.nodes[k]);
    return std::exp(-z) * acc;
}

} // namespace

std::complex<double> expint_e1(std::complex<double> z) {
    if (z == std::complex<double>(0.0, 0.0)) throw std::domain_error("E1(0) diverges");
    const double re = z.real();
    const double im_abs = std::abs(z.imag());
    if (im_abs >= 10.0) return e1_laguerre(z);
    if (re >= 1.0 && re >= im_abs) return e1_continued_fraction(z);
    return e1_series(z);
}

} // namespace hqd::detail
