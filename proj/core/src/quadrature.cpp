#include "hqd/detail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hqd/errors.hpp"

namespace hqd::detail {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

void panel(const std::function<std::complex<double>(double)>& f, double a, double b,
           QuadResult& acc) {
    double err_re = 0.0, err_im = 0.0, l1_re = 0.0, l1_im = 0.0;
    const double re =
        GK::integrate([&](double w) { return f(w).real(); }, a, b, 8, 1e-10, &err_re, &l1_re);
    const double im =
        GK::integrate([&](double w) { return f(w).imag(); }, a, b, 8, 1e-10, &err_im, &l1_im);
    acc.value += std::complex<double>(re, im);
    acc.error += err_re + err_im;
    acc.l1 += l1_re + l1_im;
}

} // namespace

QuadResult integrate_oscillatory(const std::function<std::complex<double>(double)>& f, double a,
                                 double b, double osc_freq, double structure_scale) {
    QuadResult acc;
    if (b <= a) return acc;

    // Coarse breakpoints: linear resolution across the structured region,
    // geometric growth beyond it. Each segment is then split at half-period
    // boundaries of the oscillation and integrated adaptively.
    std::vector<double> breaks{a};
    const double s = std::clamp(structure_scale, 1e-3, b);
    if (a < s) {
        constexpr int kStructurePanels = 16;
        for (int i = 1; i <= kStructurePanels; ++i)
            breaks.push_back(a + (s - a) * i / kStructurePanels);
    }
    double edge = std::max(breaks.back(), s);
    while (edge < b) {
        edge *= 2.0;
        breaks.push_back(std::min(edge, b));
    }
    if (breaks.back() < b) breaks.push_back(b);

    // Panel budget is checked up front so an over-demanding request fails
    // fast instead of grinding through a huge panel list.
    const double half_period = osc_freq > 0.0 ? M_PI / osc_freq : 0.0;
    std::vector<std::size_t> panels_of(breaks.size() - 1, 1);
    std::size_t total_panels = 0;
    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        if (half_period > 0.0)
            panels_of[seg] = std::max<std::size_t>(
                static_cast<std::size_t>(std::ceil((breaks[seg + 1] - breaks[seg]) / half_period)),
                1);
        total_panels += panels_of[seg];
    }
    require(total_panels <= 40000, Errc::QuadratureNotConverged,
            "oscillatory splitting needs too many panels (cutoff x frequency too large)");

    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        const double lo = breaks[seg], hi = breaks[seg + 1];
        const std::size_t n_panels = panels_of[seg];
        const double width = (hi - lo) / static_cast<double>(n_panels);
        for (std::size_t i = 0; i < n_panels; ++i) {
            const double p_lo = lo + i * width;
            const double p_hi = (i + 1 == n_panels) ? hi : p_lo + width;
            panel(f, p_lo, p_hi, acc);
        }
    }
    return acc;
}

} // namespace hqd::detail
