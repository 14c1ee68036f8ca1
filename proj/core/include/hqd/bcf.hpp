// bcf.hpp — bath correlation functions: exponential modes, discrete baths,
// thermal quadrature reference, and sum-over-poles residue expansion.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hqd/types.hpp"

namespace hqd::bcf {

// One exponential term g * exp(-w t) of a BCF; w = gamma + i Omega.
struct Mode {
    Complex g;
    Complex w;
};

// alpha(t) = sum_j g_j exp(-w_j t) for t >= 0. Callers needing alpha(-t)
// must use conjugate symmetry explicitly.
Complex eval_modes(std::span<const Mode> modes, double t);

// Undamped modes (|g_l|^2, i w_l) of a discrete bath, so that the mode sum
// is alpha(t) = sum_l |g_l|^2 exp(-i w_l t).
std::vector<Mode> discrete_bath_modes(std::span<const Complex> couplings,
                                      std::span<const double> frequencies);

// Rational spectral density J(w) = sum_p residue_p / (w - location_p).
// Physical validity requires J real and >= -1e-10 on the positive axis.
struct PoleSpectralDensity {
    struct Pole {
        Complex location;
        Complex residue;
    };
    std::vector<Pole> poles;
    std::string label;

    Complex eval(Complex omega) const;

    // Largest |Re location| + 50 max |Im location|; heuristic end of the
    // structured region, used for validation sampling and quadrature cutoffs.
    double structure_scale() const;

    // Even continuation 0.5 * (J(w) + J(-w)); idempotent on even densities.
    PoleSpectralDensity symmetrized() const;

    bool is_even(double tol = 1e-10) const;

    // Throws InvalidSpectralDensity if J is non-real or significantly
    // negative on (0, omega_max].
    void validate(double omega_max = 0.0, int samples = 4000) const;

    // Even Lorentzian pair centered at +-center with half width `width`;
    // integral over the positive axis equals strength / 2 exactly.
    static PoleSpectralDensity lorentzian(double strength, double center, double width,
                                          std::string label = "lorentzian");
};

struct ThermalParams {
    double temperature = 0.0;       // T >= 0, k_B = 1
    double chemical_potential = 0.0; // mu
};

enum class BcfKind {
    AlphaFermi,    // int J (1 - nbar) e^{-iwt} dw
    BetaFermi,     // int J nbar e^{+iwt} dw
    SpinBathAlpha, // int J {cos wt - i tanh(w/2T) sin wt} dw
};

// Reference oracle: direct numerical integration of the defining integral
// over (0, inf) to ~1e-8 relative accuracy (relative to the cancellation-free
// magnitude of the integral). Handles T = 0 via the step-function limit.
Complex thermal_bcf_quadrature(const PoleSpectralDensity& j, const ThermalParams& th, BcfKind kind,
                               double t);

enum class PoleScheme { Matsubara, Pade };
enum class PoleTarget { Tanh, Fermi };

struct PoleTerm {
    Complex pole;
    Complex residue;
};

// Upper-half-plane poles/residues of a rational approximant of
// tanh(w / 2T). The full approximant includes the mirrored lower poles with
// equal residues: tanh(w/2T) ~ sum_j [R_j/(w - P_j) + R_j/(w + P_j)].
// Matsubara truncates the exact pole series (poles i pi T (2n+1), residues
// 2T); Pade uses the [N-1/N] construction. With target Fermi the returned
// terms are the poles of nbar(w) - 1/2 located at mu +- i xi T.
std::vector<PoleTerm> sum_over_poles(const ThermalParams& th, PoleScheme scheme, int count,
                                     PoleTarget target = PoleTarget::Tanh);

// Value of the tanh approximant described above at complex omega.
Complex eval_tanh_approx(std::span<const PoleTerm> terms, Complex omega);

// Closes the Fourier contour of the symmetrically continued spin-bath BCF
// and collects residues of J~ * (1 + tanh approximant), returning exponential
// modes. count = 0 keeps only the poles of J~ (the cosine-transform part).
// Requires temperature > 0 whenever count > 0.
std::vector<Mode> residue_expand(const PoleSpectralDensity& j, const ThermalParams& th,
                                 PoleScheme scheme, int count);

} // namespace hqd::bcf
