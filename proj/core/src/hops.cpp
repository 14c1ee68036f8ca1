#include "hqd/hops.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <Eigen/LU>

namespace hqd::hops {

namespace {

// Consecutive seeds are accumulated per block in seed order; block partials
// are then combined in block order. Fixed block size keeps the reduction
// independent of the worker count.
constexpr int kEnsembleBlock = 32;

class HopsEquation {
  public:
    HopsEquation(const SystemSpec& spec, std::span<const bcf::Mode> modes,
                 const idx::Truncation& truncation, bool terminator)
        : spec_(validate_system(spec)),
          d_(static_cast<int>(spec_.dim)),
          channels_(spec_.channel_count()) {
        require(spec_.statistics == Statistics::Bosonic, Errc::IncompatibleSolver,
                "the stochastic hierarchy requires bosonic statistics");
        require(static_cast<int>(modes.size()) == channels_, Errc::LengthMismatch,
                "one mode per coupling channel required");
        modes_.assign(modes.begin(), modes.end());
        space_ = std::make_shared<idx::IndexSpace>(
            idx::build_index_space(channels_, Statistics::Bosonic, truncation));
        h_ = spec_.hamiltonian;
        for (const auto& l : spec_.couplings) {
            ls_.push_back(l);
            ldags_.push_back(l.adjoint());
        }
        decay_.resize(space_->size());
        for (int p = 0; p < space_->size(); ++p) {
            Complex acc = 0.0;
            const auto& k = space_->index(p);
            for (int j = 0; j < channels_; ++j) acc += static_cast<double>(k[j]) * modes_[j].w;
            decay_[p] = acc;
        }
        if (terminator) build_terminators();
    }

    const std::shared_ptr<const idx::IndexSpace>& space() const { return space_; }
    int dim() const { return d_; }
    Eigen::Index flat_size() const { return static_cast<Eigen::Index>(space_->size()) * d_; }

    Vector initial_state(const Vector& psi0) const {
        require(psi0.size() == d_, Errc::DimensionMismatch, "psi0 dimension mismatch");
        Vector y = Vector::Zero(flat_size());
        y.head(d_) = psi0;
        return y;
    }

    void rhs(std::span<const Complex> zbar, const Vector& y, Vector& dy) const {
        require(static_cast<int>(zbar.size()) == channels_, Errc::LengthMismatch,
                "one noise value per channel required");
        const int n = space_->size();
        for (int p = 0; p < n; ++p) {
            const auto psi = y.segment(static_cast<Eigen::Index>(p) * d_, d_);
            auto out = dy.segment(static_cast<Eigen::Index>(p) * d_, d_);
            out.noalias() = -I * (h_ * psi);
            out -= decay_[p] * psi;
            for (int j = 0; j < channels_; ++j) {
                out.noalias() += zbar[j] * (ls_[j] * psi);
                if (const int q = space_->down(p, j); q >= 0) {
                    const double kj = space_->index(p)[j];
                    out.noalias() +=
                        (kj * modes_[j].g) * (ls_[j] * y.segment(static_cast<Eigen::Index>(q) * d_, d_));
                }
                if (const int q = space_->up(p, j); q >= 0) {
                    out.noalias() -= ldags_[j] * y.segment(static_cast<Eigen::Index>(q) * d_, d_);
                }
            }
        }
        // Static closure of the cut states, applied after the regular sweep.
        for (const auto& term : terminators_) {
            Vector source = Vector::Zero(d_);
            for (const auto& [pos, channel, coeff] : term.sources)
                source.noalias() += coeff * (ls_[channel] *
                                             y.segment(static_cast<Eigen::Index>(pos) * d_, d_));
            const Vector theta = term.solve * source;
            dy.segment(static_cast<Eigen::Index>(term.position) * d_, d_).noalias() -=
                ldags_[term.channel] * theta;
        }
    }

  private:
    struct Terminator {
        int position; // boundary state k
        int channel;  // cut direction j
        Matrix solve; // -(-iH - (k+e_j).w)^{-1}
        std::vector<std::tuple<int, int, Complex>> sources; // (position, channel i, (k_i+d_ij) g_i)
    };

    void build_terminators() {
        for (int p = 0; p < space_->size(); ++p) {
            for (int j = 0; j < channels_; ++j) {
                if (space_->up(p, j) >= 0) continue;
                idx::MultiIndex cut = space_->index(p);
                cut[j] += 1;
                Complex kw = 0.0;
                for (int c = 0; c < channels_; ++c)
                    kw += static_cast<double>(cut[c]) * modes_[c].w;
                Matrix a = -I * h_ - kw * Matrix::Identity(d_, d_);
                Terminator term;
                term.position = p;
                term.channel = j;
                term.solve = -a.partialPivLu().inverse();
                for (int i = 0; i < channels_; ++i) {
                    if (cut[i] == 0) continue;
                    idx::MultiIndex src = cut;
                    src[i] -= 1;
                    const int pos = space_->position_of(src);
                    if (pos < 0) continue;
                    term.sources.emplace_back(pos, i,
                                              static_cast<double>(cut[i]) * modes_[i].g);
                }
                terminators_.push_back(std::move(term));
            }
        }
    }

    SystemSpec spec_;
    int d_;
    int channels_;
    std::vector<bcf::Mode> modes_;
    std::shared_ptr<const idx::IndexSpace> space_;
    Matrix h_;
    std::vector<Matrix> ls_, ldags_;
    std::vector<Complex> decay_;
    std::vector<Terminator> terminators_;
};

std::vector<noise::CubicInterpolant> sample_noise(const HopsRun& run, std::uint64_t seed) {
    std::vector<noise::CubicInterpolant> interp;
    interp.reserve(run.modes.size());
    for (int j = 0; j < static_cast<int>(run.modes.size()); ++j) {
        const bcf::Mode mode = run.modes[j];
        auto path = noise::sample(std::span(&mode, 1), run.grid, j, seed);
        interp.emplace_back(run.grid, std::move(path.values));
    }
    return interp;
}

// The multiplicative factor in the equation is the conjugate process.
void noise_values(const std::vector<noise::CubicInterpolant>& interp, double t,
                  std::vector<Complex>& zbar) {
    for (std::size_t j = 0; j < interp.size(); ++j) zbar[j] = std::conj(interp[j](t));
}

} // namespace

HopsState hops_rhs(const HopsState& state, double t, std::span<const Complex> zbar,
                   const HopsRun& run) {
    require(state.space != nullptr, Errc::InvalidArgument, "state without index space");
    (void)t;
    HopsEquation eq(run.spec, run.modes, run.truncation, run.terminator);
    require(state.space->size() == eq.space()->size(), Errc::LengthMismatch,
            "state space does not match the run truncation");
    require(static_cast<int>(state.vectors.size()) == state.space->size(), Errc::LengthMismatch,
            "vector count does not match the index space");
    Vector y(eq.flat_size()), dy(eq.flat_size());
    const int d = eq.dim();
    for (int p = 0; p < state.space->size(); ++p) y.segment(static_cast<Eigen::Index>(p) * d, d) = state.vectors[p];
    eq.rhs(zbar, y, dy);
    HopsState out;
    out.space = eq.space();
    out.vectors.resize(state.vectors.size());
    for (int p = 0; p < state.space->size(); ++p)
        out.vectors[p] = dy.segment(static_cast<Eigen::Index>(p) * d, d);
    return out;
}

Trajectory propagate_trajectory(const HopsRun& run, std::uint64_t seed, bool keep_aux) {
    HopsEquation eq(run.spec, run.modes, run.truncation, run.terminator);
    const auto interp = sample_noise(run, seed);
    std::vector<Complex> zbar(run.modes.size());
    const int d = eq.dim();

    Trajectory traj;
    traj.seed = seed;
    auto rhs = [&](double t, const Vector& y, Vector& dy) {
        noise_values(interp, t, zbar);
        eq.rhs(zbar, y, dy);
    };
    integrate_observe(rhs, eq.initial_state(run.psi0), run.grid, run.method, run.tol,
                      [&](int, double t, const Vector& y) {
                          traj.times.push_back(t);
                          traj.system_state.push_back(y.head(d));
                          if (keep_aux) {
                              std::vector<Vector> set;
                              set.reserve(eq.space()->size());
                              for (int p = 0; p < eq.space()->size(); ++p)
                                  set.push_back(y.segment(static_cast<Eigen::Index>(p) * d, d));
                              traj.aux.push_back(std::move(set));
                          }
                      });
    return traj;
}

namespace {

struct BlockAccumulator {
    std::vector<Matrix> sum;           // per retained point
    std::vector<Eigen::MatrixXd> sum_sq;

    void init(int points, int d) {
        sum.assign(points, Matrix::Zero(d, d));
        sum_sq.assign(points, Eigen::MatrixXd::Zero(d, d));
    }

    void add_dyad(int point, const Vector& psi) {
        const Matrix dyad = psi * psi.adjoint();
        sum[point] += dyad;
        sum_sq[point] += dyad.cwiseAbs2();
    }
};

EnsembleDensity finalize(const std::vector<BlockAccumulator>& blocks,
                         const std::vector<double>& times, int d, int count) {
    require(count >= 2, Errc::InsufficientTrajectories, "ensemble needs at least two trajectories");
    const int points = static_cast<int>(times.size());
    EnsembleDensity out;
    out.times = times;
    out.trajectories = count;
    out.rho.assign(points, Matrix::Zero(d, d));
    out.std_error.assign(points, Eigen::MatrixXd::Zero(d, d));
    std::vector<Eigen::MatrixXd> sq(points, Eigen::MatrixXd::Zero(d, d));
    for (const auto& b : blocks) {
        if (b.sum.empty()) continue;
        for (int i = 0; i < points; ++i) {
            out.rho[i] += b.sum[i];
            sq[i] += b.sum_sq[i];
        }
    }
    const double n = count;
    for (int i = 0; i < points; ++i) {
        out.rho[i] /= n;
        const Eigen::MatrixXd var =
            ((sq[i] / n - out.rho[i].cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
        out.std_error[i] = (var / n).cwiseSqrt();
    }
    return out;
}

} // namespace

EnsembleDensity ensemble_density(std::span<const Trajectory> trajectories) {
    require(trajectories.size() >= 2, Errc::InsufficientTrajectories,
            "ensemble needs at least two trajectories");
    const auto& first = trajectories.front();
    const int d = static_cast<int>(first.system_state.front().size());
    BlockAccumulator acc;
    acc.init(static_cast<int>(first.times.size()), d);
    for (const auto& t : trajectories) {
        require(t.times.size() == first.times.size(), Errc::GridMismatch,
                "trajectories on different grids");
        for (std::size_t i = 0; i < t.times.size(); ++i)
            acc.add_dyad(static_cast<int>(i), t.system_state[i]);
    }
    return finalize({acc}, first.times, d, static_cast<int>(trajectories.size()));
}

EnsembleDensity run_ensemble(const HopsRun& run, std::span<const std::uint64_t> seeds,
                             int threads, int output_stride) {
    require(seeds.size() >= 2, Errc::InsufficientTrajectories,
            "ensemble needs at least two seeds");
    HopsEquation eq(run.spec, run.modes, run.truncation, run.terminator);
    const int d = eq.dim();
    const int stride = std::max(output_stride, 1);

    std::vector<double> times;
    std::vector<int> retained(run.grid.points(), -1);
    for (int i = 0; i <= run.grid.steps; ++i) {
        if (i % stride == 0 || i == run.grid.steps) {
            retained[i] = static_cast<int>(times.size());
            times.push_back(run.grid.time(i));
        }
    }

    const int n_blocks =
        static_cast<int>((seeds.size() + kEnsembleBlock - 1) / kEnsembleBlock);
    std::vector<BlockAccumulator> blocks(n_blocks);
    std::atomic<int> next_block{0};

    auto worker = [&]() {
        std::vector<Complex> zbar(run.modes.size());
        Vector y, dy;
        for (;;) {
            const int b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            auto& acc = blocks[b];
            acc.init(static_cast<int>(times.size()), d);
            const std::size_t begin = static_cast<std::size_t>(b) * kEnsembleBlock;
            const std::size_t end = std::min(begin + kEnsembleBlock, seeds.size());
            for (std::size_t s = begin; s < end; ++s) {
                const auto interp = sample_noise(run, seeds[s]);
                auto rhs = [&](double t, const Vector& yy, Vector& dyy) {
                    noise_values(interp, t, zbar);
                    eq.rhs(zbar, yy, dyy);
                };
                integrate_observe(rhs, eq.initial_state(run.psi0), run.grid, run.method, run.tol,
                                  [&](int index, double, const Vector& yy) {
                                      if (retained[index] < 0) return;
                                      acc.add_dyad(retained[index], yy.head(d));
                                  });
            }
        }
    };

    const int n_workers = std::clamp(threads, 1, n_blocks);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return finalize(blocks, times, d, static_cast<int>(seeds.size()));
}

} // namespace hqd::hops
