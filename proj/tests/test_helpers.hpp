#pragma once

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "hqd/types.hpp"

namespace hqd::test {

inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix sigma_minus() { // |g><e| with |e> = basis state 0
    Matrix m(2, 2);
    m << 0, 0, 1, 0;
    return m;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = Complex(normal(rng), normal(rng));
    return 0.5 * (a + a.adjoint()).eval();
}

inline Matrix random_matrix(int d, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = Complex(normal(rng), normal(rng));
    return a;
}

inline Vector excited_state() {
    Vector v(2);
    v << 1.0, 0.0;
    return v;
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace hqd::test
