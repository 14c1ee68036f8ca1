// noise.hpp — stationary complex Gaussian processes with E[Z Z] = 0 and
// E[Z(t) Zbar(s)] = alpha(t - s), generated by the FFT spectral method with
// a counter-based RNG for schedule-independent reproducibility.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hqd/bcf.hpp"
#include "hqd/types.hpp"

namespace hqd::noise {

struct NoisePath {
    int channel = 0;
    TimeGrid grid;
    std::vector<Complex> values; // one per grid point
    std::uint64_t seed = 0;
};

struct SpectralWeights {
    std::vector<double> weights; // clipped non-negative DFT of the two-sided alpha
    int n_fft = 0;
    double dt = 0.0;
    double min_pre_clip = 0.0; // most negative value before clipping
};

// DFT of the periodized two-sided alpha on >= 2 x steps points with padding
// of at least 5 / min gamma_j beyond the grid span. Throws
// SpectrumSignificantlyNegative when the pre-clip minimum is below
// -1e-6 x the spectral maximum.
SpectralWeights spectral_weights(std::span<const bcf::Mode> modes, const TimeGrid& grid);

// Standard complex Gaussian keyed by (seed, channel, counter); bit-stable
// across schedules and platforms with IEEE doubles.
Complex counter_gaussian(std::uint64_t seed, std::uint64_t channel, std::uint64_t counter);

// Draws one realization Z(t_i) = sum_k sqrt(weight_k / N) xi_k e^{-i w_k t_i}.
NoisePath sample(std::span<const bcf::Mode> modes, const TimeGrid& grid, int channel,
                 std::uint64_t seed);

struct CorrelationEstimate {
    std::vector<int> lags;
    std::vector<Complex> mean;
    std::vector<double> std_error;
};

// Unbiased estimate of E[Z(t + tau) Zbar(t)] (or E[Z Z] with conjugated =
// false) averaged over window starts, with per-lag standard errors from the
// path-to-path scatter.
CorrelationEstimate estimate_correlation(std::span<const NoisePath> paths,
                                         std::span<const int> lags, bool conjugated = true);

// Catmull-Rom interpolation of a sampled path on its uniform grid; exact at
// the nodes, used for integrator substep times.
class CubicInterpolant {
  public:
    CubicInterpolant(const TimeGrid& grid, std::vector<Complex> values);

    Complex operator()(double t) const;

  private:
    TimeGrid grid_;
    std::vector<Complex> values_;
};

} // namespace hqd::noise
