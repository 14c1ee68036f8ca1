#pragma once

#include <complex>
#include <functional>

namespace hqd::detail {

struct QuadResult {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0; // accumulated absolute error estimate
    double l1 = 0.0;    // accumulated L1 norm (cancellation-free magnitude)
};

// Adaptive Gauss-Kronrod integration of a complex integrand over [a, b].
// The interval is pre-split linearly across [a, structure_scale] and
// geometrically beyond, then each segment is split at half-period
// boundaries pi/osc_freq so a panel sees at most one oscillation lobe.
QuadResult integrate_oscillatory(const std::function<std::complex<double>(double)>& f, double a,
                                 double b, double osc_freq, double structure_scale);

} // namespace hqd::detail
