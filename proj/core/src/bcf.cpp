#include "hqd/bcf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "hqd/detail/expint.hpp"
#include "hqd/detail/quadrature.hpp"

namespace hqd::bcf {

namespace {

// Stable Fermi-Dirac occupation nbar = 1 / (exp((w - mu)/T) + 1).
double fermi_occupation(double omega, const ThermalParams& th) {
    if (th.temperature == 0.0) {
        if (omega < th.chemical_potential) return 1.0;
        if (omega > th.chemical_potential) return 0.0;
        return 0.5;
    }
    const double x = (omega - th.chemical_potential) / th.temperature;
    if (x > 0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double tanh_half(double omega, double temperature) {
    if (temperature == 0.0) return omega > 0 ? 1.0 : (omega < 0 ? -1.0 : 0.0);
    return std::tanh(omega / (2.0 * temperature));
}

// int_W^inf J(w) e^{-iwt} dw for rational J, via E1 for t != 0 and the
// logarithmic limit (valid because sum of residues vanishes) at t = 0.
Complex rational_tail(const PoleSpectralDensity& j, double cutoff, double t) {
    Complex acc = 0.0;
    if (t == 0.0) {
        for (const auto& p : j.poles) acc -= p.residue * std::log(Complex(cutoff) - p.location);
        return acc;
    }
    for (const auto& p : j.poles) {
        const Complex z = I * t * (Complex(cutoff) - p.location);
        acc += p.residue * std::exp(-I * p.location * t) * detail::expint_e1(z);
    }
    return acc;
}

// Quadrature cutoff: beyond it the Fermi factor is 1 (to ~e^{-64}) and the
// remaining pure-phase rational tail is evaluated analytically. The thermal
// term grows with T, so extreme temperatures (T far above the spectral
// scales) surface as QuadratureNotConverged via the panel guard.
double thermal_cutoff(const PoleSpectralDensity& j, const ThermalParams& th, bool with_mu) {
    double w = std::max(j.structure_scale(), 30.0) + 64.0 * th.temperature;
    if (with_mu) w += std::max(th.chemical_potential, 0.0);
    return w;
}

} // namespace

Complex eval_modes(std::span<const Mode> modes, double t) {
    require(t >= 0.0, Errc::NegativeTime,
            "eval_modes requires t >= 0; use conjugate symmetry for alpha(-t)");
    Complex acc = 0.0;
    for (const auto& m : modes) acc += m.g * std::exp(-m.w * t);
    return acc;
}

std::vector<Mode> discrete_bath_modes(std::span<const Complex> couplings,
                                      std::span<const double> frequencies) {
    require(couplings.size() == frequencies.size(), Errc::LengthMismatch,
            "couplings and frequencies differ in length");
    require(!couplings.empty(), Errc::LengthMismatch, "discrete bath needs at least one mode");
    std::vector<Mode> modes(couplings.size());
    for (std::size_t l = 0; l < couplings.size(); ++l)
        modes[l] = Mode{std::norm(couplings[l]), I * frequencies[l]};
    return modes;
}

Complex PoleSpectralDensity::eval(Complex omega) const {
    Complex acc = 0.0;
    for (const auto& p : poles) acc += p.residue / (omega - p.location);
    return acc;
}

double PoleSpectralDensity::structure_scale() const {
    double re_max = 0.0, im_max = 0.0;
    for (const auto& p : poles) {
        re_max = std::max(re_max, std::abs(p.location.real()));
        im_max = std::max(im_max, std::abs(p.location.imag()));
    }
    return re_max + 50.0 * im_max;
}

PoleSpectralDensity PoleSpectralDensity::symmetrized() const {
    PoleSpectralDensity out;
    out.label = label;
    std::vector<Pole> candidates;
    for (const auto& p : poles) {
        candidates.push_back({p.location, 0.5 * p.residue});
        candidates.push_back({-p.location, -0.5 * p.residue});
    }
    const double scale = std::max(structure_scale(), 1e-300);
    for (const auto& c : candidates) {
        bool merged = false;
        for (auto& q : out.poles) {
            if (std::abs(q.location - c.location) < 1e-12 * scale) {
                q.residue += c.residue;
                merged = true;
                break;
            }
        }
        if (!merged) out.poles.push_back(c);
    }
    std::erase_if(out.poles, [&](const Pole& p) { return std::abs(p.residue) < 1e-300; });
    return out;
}

bool PoleSpectralDensity::is_even(double tol) const {
    const double w = std::max(structure_scale(), 1.0);
    double max_dev = 0.0, scale = 0.0;
    for (int i = 1; i <= 97; ++i) {
        const double x = w * i / 97.0;
        const Complex a = eval(x), b = eval(-x);
        max_dev = std::max(max_dev, std::abs(a - b));
        scale = std::max(scale, std::abs(a));
    }
    return max_dev <= tol * std::max(scale, 1e-300);
}

void PoleSpectralDensity::validate(double omega_max, int samples) const {
    require(!poles.empty(), Errc::InvalidSpectralDensity, "no poles given");
    Complex residue_sum = 0.0;
    for (const auto& p : poles) residue_sum += p.residue;
    const double w_hi = omega_max > 0 ? omega_max : std::max(structure_scale(), 1.0);
    double max_abs = 0.0;
    for (int i = 1; i <= samples; ++i) {
        const double w = w_hi * i / samples;
        max_abs = std::max(max_abs, std::abs(eval(w)));
    }
    require(max_abs > 0, Errc::InvalidSpectralDensity, "J vanishes on (0, omega_max)");
    for (int i = 1; i <= samples; ++i) {
        const double w = w_hi * i / samples;
        const Complex v = eval(w);
        require(std::abs(v.imag()) <= 1e-10 * max_abs, Errc::InvalidSpectralDensity,
                "J(w) is not real on the positive axis");
        require(v.real() >= -1e-10 * max_abs, Errc::InvalidSpectralDensity,
                "J(w) < 0 on the positive axis");
    }
    require(std::abs(residue_sum) <= 1e-10 * max_abs, Errc::InvalidSpectralDensity,
            "residues must sum to zero for an integrable density");
}

PoleSpectralDensity PoleSpectralDensity::lorentzian(double strength, double center, double width,
                                                    std::string label) {
    require(width > 0, Errc::InvalidArgument, "lorentzian width must be positive");
    const Complex r = strength / (4.0 * M_PI) * (-I);
    PoleSpectralDensity j;
    j.label = std::move(label);
    j.poles = {{Complex(center, width), r},
               {Complex(center, -width), -r},
               {Complex(-center, width), r},
               {Complex(-center, -width), -r}};
    if (center == 0.0) { // the +-center pairs coincide
        j.poles = {{Complex(0.0, width), 2.0 * r}, {Complex(0.0, -width), -2.0 * r}};
    }
    return j;
}

Complex thermal_bcf_quadrature(const PoleSpectralDensity& j, const ThermalParams& th, BcfKind kind,
                               double t) {
    require(th.temperature >= 0.0, Errc::InvalidArgument, "temperature must be >= 0");
    const double osc = std::abs(t);
    const double structure = std::max(j.structure_scale(), 1.0);

    detail::QuadResult q;
    Complex tail = 0.0;
    switch (kind) {
        case BcfKind::SpinBathAlpha: {
            const double cutoff = thermal_cutoff(j, th, false);
            auto f = [&](double w) {
                const double th_w = tanh_half(w, th.temperature);
                return j.eval(w) * Complex(std::cos(w * t), -th_w * std::sin(w * t));
            };
            q = detail::integrate_oscillatory(f, 0.0, cutoff, osc, structure);
            // Beyond the cutoff tanh == 1 to better than 1e-27.
            tail = rational_tail(j, cutoff, t);
            break;
        }
        case BcfKind::AlphaFermi: {
            const double cutoff = thermal_cutoff(j, th, true);
            auto f = [&](double w) {
                return j.eval(w) * (1.0 - fermi_occupation(w, th)) * std::exp(-I * w * t);
            };
            const double lo =
                th.temperature == 0.0 ? std::clamp(th.chemical_potential, 0.0, cutoff) : 0.0;
            q = detail::integrate_oscillatory(f, lo, cutoff, osc, structure);
            tail = rational_tail(j, cutoff, t);
            break;
        }
        case BcfKind::BetaFermi: {
            auto f = [&](double w) {
                return j.eval(w) * fermi_occupation(w, th) * std::exp(I * w * t);
            };
            double hi = thermal_cutoff(j, th, true);
            if (th.temperature == 0.0) hi = std::max(th.chemical_potential, 0.0);
            q = detail::integrate_oscillatory(f, 0.0, hi, osc, structure);
            break;
        }
    }
    const double scale = std::max({q.l1, std::abs(q.value + tail), 1e-300});
    require(q.error <= 1e-8 * scale, Errc::QuadratureNotConverged,
            "BCF quadrature error estimate exceeds 1e-8 relative accuracy");
    return q.value + tail;
}

namespace {

// Positive eigenvalues of the symmetric tridiagonal matrix with zero diagonal
// and off-diagonal 1/sqrt(b_m b_{m+1}).
std::vector<double> positive_tridiag_eigs(const std::vector<double>& b) {
    const int n = static_cast<int>(b.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        const double v = 1.0 / std::sqrt(b[i] * b[i + 1]);
        m(i, i + 1) = v;
        m(i + 1, i) = v;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    require(solver.info() == Eigen::Success, Errc::EigDecompositionFailed,
            "Pade pole construction: tridiagonal eigensolve failed");
    std::vector<double> pos;
    for (int i = 0; i < n; ++i)
        if (solver.eigenvalues()[i] > 1e-14) pos.push_back(solver.eigenvalues()[i]);
    std::sort(pos.begin(), pos.end(), std::greater<>()); // largest lambda = smallest xi first
    return pos;
}

// [N-1/N] Pade decomposition of tanh(x/2): tanh(x/2) ~ sum_j 4 eta_j x / (x^2 + xi_j^2).
void pade_tanh(int n, std::vector<double>& xi, std::vector<double>& eta) {
    std::vector<double> b(2 * n);
    for (int m = 0; m < 2 * n; ++m) b[m] = 2 * m + 1; // 1, 3, 5, ...
    const auto lambda = positive_tridiag_eigs(b);
    require(static_cast<int>(lambda.size()) == n, Errc::EigDecompositionFailed,
            "Pade pole construction: expected N positive eigenvalues");
    xi.resize(n);
    for (int i = 0; i < n; ++i) xi[i] = 2.0 / lambda[i];

    std::vector<double> zeta;
    if (n > 1) {
        std::vector<double> bt(2 * n - 1);
        for (int m = 0; m < 2 * n - 1; ++m) bt[m] = 2 * m + 3; // 3, 5, 7, ...
        const auto mu = positive_tridiag_eigs(bt);
        require(static_cast<int>(mu.size()) == n - 1, Errc::EigDecompositionFailed,
                "Pade zero construction: expected N-1 positive eigenvalues");
        zeta.resize(n - 1);
        for (int i = 0; i < n - 1; ++i) zeta[i] = 2.0 / mu[i];
    }

    // Fix the overall constant by the leading Taylor coefficient, then read
    // off the partial-fraction residues.
    double c = 0.25;
    for (int i = 0; i < n; ++i) c *= xi[i] * xi[i];
    for (double z : zeta) c /= z * z;
    eta.resize(n);
    for (int jdx = 0; jdx < n; ++jdx) {
        double num = 1.0, den = 1.0;
        for (double z : zeta) num *= z * z - xi[jdx] * xi[jdx];
        for (int k = 0; k < n; ++k)
            if (k != jdx) den *= xi[k] * xi[k] - xi[jdx] * xi[jdx];
        eta[jdx] = 0.5 * c * num / den;
    }
}

} // namespace

std::vector<PoleTerm> sum_over_poles(const ThermalParams& th, PoleScheme scheme, int count,
                                     PoleTarget target) {
    require(th.temperature > 0.0, Errc::ZeroTemperature,
            "sum-over-poles needs T > 0; use the T = 0 step-function path instead");
    require(count >= 1, Errc::InvalidArgument, "count must be positive");
    const double temp = th.temperature;

    std::vector<PoleTerm> terms(count);
    if (scheme == PoleScheme::Matsubara) {
        for (int n = 0; n < count; ++n)
            terms[n] = {I * (M_PI * temp * (2 * n + 1)), Complex(2.0 * temp)};
    } else {
        std::vector<double> xi, eta;
        pade_tanh(count, xi, eta);
        for (int n = 0; n < count; ++n) terms[n] = {I * (xi[n] * temp), Complex(2.0 * eta[n] * temp)};
    }

    if (target == PoleTarget::Fermi) {
        // nbar(w) = 1/2 - tanh((w - mu)/2T)/2: poles shift by mu, residues scale by -1/2.
        for (auto& term : terms) {
            term.pole += th.chemical_potential;
            term.residue *= -0.5;
        }
    }
    return terms;
}

Complex eval_tanh_approx(std::span<const PoleTerm> terms, Complex omega) {
    Complex acc = 0.0;
    for (const auto& term : terms)
        acc += term.residue / (omega - term.pole) + term.residue / (omega + term.pole);
    return acc;
}

std::vector<Mode> residue_expand(const PoleSpectralDensity& j_in, const ThermalParams& th,
                                 PoleScheme scheme, int count) {
    const PoleSpectralDensity j = j_in.symmetrized();
    const double scale = std::max(j.structure_scale(), 1e-300);
    for (const auto& p : j.poles)
        require(std::abs(p.location.imag()) > 1e-12 * scale, Errc::PoleOnRealAxis,
                "spectral density pole on the real axis");
    for (std::size_t a = 0; a < j.poles.size(); ++a)
        for (std::size_t b = a + 1; b < j.poles.size(); ++b)
            require(std::abs(j.poles[a].location - j.poles[b].location) > 1e-10 * scale,
                    Errc::DegeneratePoles, "degenerate spectral density poles");

    std::vector<PoleTerm> tanh_terms;
    if (count > 0) tanh_terms = sum_over_poles(th, scheme, count, PoleTarget::Tanh);

    // alpha(t) = 1/2 int_R J~(w) (1 + tanh_N(w/2T)) e^{-iwt} dw, closed in the
    // lower half plane for t >= 0: -pi i times the residue sum there.
    std::vector<Mode> modes;
    modes.reserve(j.poles.size() / 2 + tanh_terms.size());
    for (const auto& p : j.poles) {
        if (p.location.imag() >= 0.0) continue;
        const Complex weight = 1.0 + eval_tanh_approx(tanh_terms, p.location);
        modes.push_back(Mode{-M_PI * I * p.residue * weight, I * p.location});
    }
    for (const auto& term : tanh_terms) {
        // Mirror pole -P in the lower half plane, residue equals R.
        const Complex p_low = -term.pole;
        for (const auto& jp : j.poles)
            require(std::abs(jp.location - p_low) > 1e-10 * scale, Errc::DegeneratePoles,
                    "spectral pole collides with a thermal pole");
        modes.push_back(Mode{-M_PI * I * j.eval(p_low) * term.residue, I * p_low});
    }
    for (const auto& m : modes)
        require(m.w.real() >= -1e-12, Errc::InvalidSpectralDensity,
                "residue expansion produced a growing mode");
    return modes;
}

} // namespace hqd::bcf
