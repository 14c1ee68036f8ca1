#include "hqd/noise.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include <fftw3.h>

namespace hqd::noise {

namespace {

// FFTW planning is not thread safe; execution on distinct arrays is. Plans
// are cached per size and reused via fftw_execute_dft.
class FftEngine {
  public:
    static FftEngine& instance() {
        static FftEngine engine;
        return engine;
    }

    // sign = FFTW_FORWARD (-1) applies e^{-2 pi i k m / N}, FFTW_BACKWARD (+1).
    void transform(std::vector<Complex>& data, int sign) {
        fftw_plan plan = nullptr;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto key = std::make_pair(data.size(), sign);
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                std::vector<Complex> probe(data.size());
                plan = fftw_plan_dft_1d(static_cast<int>(data.size()),
                                        reinterpret_cast<fftw_complex*>(probe.data()),
                                        reinterpret_cast<fftw_complex*>(probe.data()), sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()),
                         reinterpret_cast<fftw_complex*>(data.data()));
    }

  private:
    FftEngine() = default;

    struct KeyHash {
        std::size_t operator()(const std::pair<std::size_t, int>& k) const {
            return k.first * 31 + static_cast<std::size_t>(k.second + 8);
        }
    };

    std::mutex mutex_;
    std::unordered_map<std::pair<std::size_t, int>, fftw_plan, KeyHash> plans_;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double to_unit_interval(std::uint64_t bits) {
    // (0, 1]: never zero, so log() below is finite.
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

double min_decay_rate(std::span<const bcf::Mode> modes) {
    double gamma = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& m : modes) {
        if (std::abs(m.g) == 0.0) continue;
        any = true;
        gamma = std::min(gamma, m.w.real());
    }
    if (!any) return std::numeric_limits<double>::infinity(); // zero process
    require(gamma > 1e-12, Errc::InvalidArgument,
            "FFT noise sampling requires decaying modes (Re w > 0)");
    return gamma;
}

} // namespace

SpectralWeights spectral_weights(std::span<const bcf::Mode> modes, const TimeGrid& grid_in) {
    const TimeGrid grid = validate_grid(grid_in);
    const double dt = grid.dt();
    const double gamma = min_decay_rate(modes);

    // Pad well past the 5/gamma correlation span so the periodization bias is
    // far below Monte Carlo standard errors.
    double pad_time = 2.0 * grid.span();
    if (std::isfinite(gamma)) pad_time = std::max(pad_time, grid.span() + 14.0 / gamma);
    std::size_t n = 1;
    while (n < static_cast<std::size_t>(std::ceil(pad_time / dt)) + 1) n <<= 1;
    n = std::max<std::size_t>(n, 2 * static_cast<std::size_t>(grid.steps));

    // Two-sided alpha periodized on n points: alpha(-t) = conj(alpha(t)).
    std::vector<Complex> samples(n);
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t mirrored = n - m;
        if (m <= n / 2)
            samples[m] = bcf::eval_modes(modes, m * dt);
        else
            samples[m] = std::conj(bcf::eval_modes(modes, mirrored * dt));
    }
    FftEngine::instance().transform(samples, FFTW_BACKWARD); // e^{+2 pi i k m / N}

    SpectralWeights out;
    out.n_fft = static_cast<int>(n);
    out.dt = dt;
    out.weights.resize(n);
    double max_val = 0.0, min_val = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = samples[k].real();
        max_val = std::max(max_val, s);
        min_val = std::min(min_val, s);
        out.weights[k] = std::max(s, 0.0);
    }
    out.min_pre_clip = min_val;
    const double ref = std::max(max_val, std::abs(min_val));
    if (ref > 0.0)
        require(min_val >= -1e-6 * ref, Errc::SpectrumSignificantlyNegative,
                "spectrum of the mode list is significantly negative");
    return out;
}

Complex counter_gaussian(std::uint64_t seed, std::uint64_t channel, std::uint64_t counter) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(channel + 0x632BE59BD9B4E019ULL));
    const std::uint64_t u1 = splitmix64(key ^ splitmix64(2 * counter));
    const std::uint64_t u2 = splitmix64(key ^ splitmix64(2 * counter + 1));
    const double radius = std::sqrt(-std::log(to_unit_interval(u1)));
    const double phase = 2.0 * M_PI * to_unit_interval(u2);
    return Complex(radius * std::cos(phase), radius * std::sin(phase));
}

NoisePath sample(std::span<const bcf::Mode> modes, const TimeGrid& grid, int channel,
                 std::uint64_t seed) {
    const SpectralWeights sw = spectral_weights(modes, grid);
    const std::size_t n = sw.weights.size();
    std::vector<Complex> coeff(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (sw.weights[k] == 0.0) {
            coeff[k] = 0.0;
            continue;
        }
        coeff[k] = std::sqrt(sw.weights[k] / static_cast<double>(n)) *
                   counter_gaussian(seed, static_cast<std::uint64_t>(channel), k);
    }
    FftEngine::instance().transform(coeff, FFTW_FORWARD); // Z_m = sum_k c_k e^{-2 pi i k m / N}

    NoisePath path;
    path.channel = channel;
    path.grid = grid;
    path.seed = seed;
    path.values.assign(coeff.begin(), coeff.begin() + grid.points());
    return path;
}

CorrelationEstimate estimate_correlation(std::span<const NoisePath> paths,
                                         std::span<const int> lags, bool conjugated) {
    require(paths.size() >= 2, Errc::InsufficientTrajectories,
            "correlation estimate needs at least two paths");
    const TimeGrid& grid = paths.front().grid;
    for (const auto& p : paths) {
        require(p.grid.steps == grid.steps && p.grid.t0 == grid.t0 && p.grid.t1 == grid.t1,
                Errc::GridMismatch, "noise paths on different grids");
        require(p.values.size() == static_cast<std::size_t>(grid.points()), Errc::GridMismatch,
                "noise path length does not match its grid");
    }

    CorrelationEstimate est;
    est.lags.assign(lags.begin(), lags.end());
    est.mean.resize(lags.size());
    est.std_error.resize(lags.size());
    const int n = grid.points();
    std::vector<Complex> per_path(paths.size());
    for (std::size_t li = 0; li < lags.size(); ++li) {
        const int lag = lags[li];
        require(lag >= 0 && lag < n, Errc::InvalidArgument, "lag outside the grid");
        for (std::size_t p = 0; p < paths.size(); ++p) {
            Complex acc = 0.0;
            for (int i = 0; i + lag < n; ++i) {
                const Complex zt = paths[p].values[i + lag];
                const Complex zs = paths[p].values[i];
                acc += conjugated ? zt * std::conj(zs) : zt * zs;
            }
            per_path[p] = acc / static_cast<double>(n - lag);
        }
        Complex mean = 0.0;
        for (const Complex& v : per_path) mean += v;
        mean /= static_cast<double>(per_path.size());
        double var = 0.0;
        for (const Complex& v : per_path) var += std::norm(v - mean);
        var /= static_cast<double>(per_path.size() - 1);
        est.mean[li] = mean;
        est.std_error[li] = std::sqrt(var / static_cast<double>(per_path.size()));
    }
    return est;
}

CubicInterpolant::CubicInterpolant(const TimeGrid& grid, std::vector<Complex> values)
    : grid_(grid), values_(std::move(values)) {
    require(values_.size() == static_cast<std::size_t>(grid.points()), Errc::GridMismatch,
            "interpolant values do not match the grid");
}

Complex CubicInterpolant::operator()(double t) const {
    const int n = grid_.points();
    const double x = (t - grid_.t0) / grid_.dt();
    int i = static_cast<int>(std::floor(x));
    i = std::clamp(i, 0, n - 2);
    const double s = x - i;
    const auto at = [&](int idx) { return values_[std::clamp(idx, 0, n - 1)]; };
    const Complex p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * s * (p2 - p0 +
                           s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                s * (3.0 * (p1 - p2) + p3 - p0)));
}

} // namespace hqd::noise
