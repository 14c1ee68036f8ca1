#include "hqd/master.hpp"

#include <chrono>
#include <cmath>

namespace hqd::master {

namespace {

// c += s * a * b on column-major d x d blocks. Tiny dimensions dominate, so
// a plain triple loop beats dynamic-size BLAS dispatch.
inline void gemm_acc(Complex s, const Complex* a, const Complex* b, Complex* c, int d) {
    for (int col = 0; col < d; ++col) {
        for (int inner = 0; inner < d; ++inner) {
            const Complex f = s * b[inner + col * d];
            if (f == Complex(0.0, 0.0)) continue;
            const Complex* acol = a + inner * d;
            Complex* ccol = c + col * d;
            for (int row = 0; row < d; ++row) ccol[row] += acol[row] * f;
        }
    }
}

// c += s * rho * a: the coupling operator acting from the right.
inline void gemm_acc_right(Complex s, const Complex* rho, const Complex* a, Complex* c, int d) {
    gemm_acc(s, rho, a, c, d);
}

inline void adjoint_into(const Complex* src, Complex* dst, int d) {
    for (int col = 0; col < d; ++col)
        for (int row = 0; row < d; ++row) dst[row + col * d] = std::conj(src[col + row * d]);
}

class MasterEquation {
  public:
    MasterEquation(const SystemSpec& spec, std::span<const bcf::Mode> modes,
                   std::shared_ptr<const idx::IndexSpace> space, bool pair_reduction)
        : spec_(validate_system(spec)),
          space_(std::move(space)),
          d_(static_cast<int>(spec_.dim)),
          channels_(spec_.channel_count()),
          pair_reduction_(pair_reduction) {
        require(static_cast<int>(modes.size()) == channels_, Errc::LengthMismatch,
                "one mode per coupling channel required");
        modes_.assign(modes.begin(), modes.end());
        h_ = spec_.hamiltonian;
        for (const auto& l : spec_.couplings) {
            ls_.push_back(l);
            ldags_.push_back(l.adjoint());
        }

        const int n = space_->size();
        decay_.resize(n);
        partner_.resize(n);
        idx::MultiIndex swapped(2 * channels_);
        for (int p = 0; p < n; ++p) {
            const auto& k = space_->index(p);
            Complex acc = 0.0;
            for (int j = 0; j < channels_; ++j)
                acc += static_cast<double>(k[j]) * modes_[j].w +
                       static_cast<double>(k[channels_ + j]) * std::conj(modes_[j].w);
            decay_[p] = acc;
            for (int j = 0; j < channels_; ++j) {
                swapped[j] = k[channels_ + j];
                swapped[channels_ + j] = k[j];
            }
            partner_[p] = space_->position_of(swapped);
            require(partner_[p] >= 0, Errc::InvalidArgument,
                    "pair space is not closed under (m,n) -> (n,m)");
        }
        if (spec_.statistics == Statistics::Fermionic) {
            sm_t_.resize(n);
            sn_t_.resize(n);
            sm_p_.resize(static_cast<std::size_t>(n) * channels_);
            sn_p_.resize(static_cast<std::size_t>(n) * channels_);
            for (int p = 0; p < n; ++p) {
                const auto& k = space_->index(p);
                const std::size_t half = channels_;
                sm_t_[p] = static_cast<int8_t>(idx::parity_sign(k, 0, half));
                sn_t_[p] = static_cast<int8_t>(idx::parity_sign(k, half, k.size()));
                for (int j = 0; j < channels_; ++j) {
                    sm_p_[p * channels_ + j] =
                        static_cast<int8_t>(idx::parity_sign(k, j + 1, half));
                    sn_p_[p * channels_ + j] =
                        static_cast<int8_t>(idx::parity_sign(k, half + j + 1, k.size()));
                }
            }
        }
        if (pair_reduction_) {
            slot_.assign(n, -1);
            for (int p = 0; p < n; ++p) {
                if (p <= partner_[p]) {
                    slot_[p] = static_cast<int>(kept_.size());
                    kept_.push_back(p);
                }
            }
        } else {
            kept_.resize(n);
            slot_.resize(n);
            for (int p = 0; p < n; ++p) {
                kept_[p] = p;
                slot_[p] = p;
            }
        }
    }

    const idx::IndexSpace& space() const { return *space_; }
    int dim() const { return d_; }
    int stored_count() const { return static_cast<int>(kept_.size()); }
    Eigen::Index flat_size() const { return static_cast<Eigen::Index>(kept_.size()) * d_ * d_; }
    int partner(int p) const { return partner_[p]; }

    Vector initial_state(const Vector& psi0) const {
        require(psi0.size() == d_, Errc::DimensionMismatch, "psi0 dimension mismatch");
        Vector y = Vector::Zero(flat_size());
        Eigen::Map<Matrix>(y.data(), d_, d_) = psi0 * psi0.adjoint();
        return y;
    }

    void rhs(const Vector& y, Vector& dy) const {
        const int d2 = d_ * d_;
        std::vector<Complex> scratch(d2);
        dy.setZero();
        for (std::size_t s = 0; s < kept_.size(); ++s) {
            const int p = kept_[s];
            const Complex* rho = y.data() + s * d2;
            Complex* out = dy.data() + s * d2;

            gemm_acc(-I, h_.data(), rho, out, d_);
            gemm_acc(I, rho, h_.data(), out, d_);
            const Complex dec = decay_[p];
            for (int e = 0; e < d2; ++e) out[e] -= dec * rho[e];

            const auto& k = space_->index(p);
            for (int j = 0; j < channels_; ++j) {
                const Complex g = modes_[j].g;
                const Complex* l = ls_[j].data();
                const Complex* ldag = ldags_[j].data();
                const bool fermi = spec_.statistics == Statistics::Fermionic;

                if (const int q = space_->down(p, j); q >= 0) {
                    const Complex* nb = fetch(y, q, scratch.data());
                    const double f = fermi ? sm_p_[p * channels_ + j] : k[j];
                    gemm_acc(f * g, l, nb, out, d_);
                }
                if (const int q = space_->down(p, channels_ + j); q >= 0) {
                    const Complex* nb = fetch(y, q, scratch.data());
                    const double f = fermi ? sn_p_[p * channels_ + j] : k[channels_ + j];
                    gemm_acc_right(f * std::conj(g), nb, ldag, out, d_);
                }
                if (const int q = space_->up(p, j); q >= 0) {
                    const Complex* nb = fetch(y, q, scratch.data());
                    if (fermi) {
                        // The Novikov-eliminated cross term carries the
                        // reordering parity of moving the derivation operator
                        // into canonical position: with m_j = 0 it equals
                        // (-1)^{|m| + |m|_j}, giving the pair parity
                        // P = (-1)^{|m| + |n|} next to s_partial(m, j).
                        const double s_mp = sm_p_[p * channels_ + j];
                        const double pair = sm_t_[p] * sn_t_[p];
                        gemm_acc(-s_mp, ldag, nb, out, d_);
                        gemm_acc_right(s_mp * pair, nb, ldag, out, d_);
                    } else {
                        gemm_acc(-1.0, ldag, nb, out, d_);
                        gemm_acc_right(1.0, nb, ldag, out, d_);
                    }
                }
                if (const int q = space_->up(p, channels_ + j); q >= 0) {
                    const Complex* nb = fetch(y, q, scratch.data());
                    if (fermi) {
                        const double s_np = sn_p_[p * channels_ + j];
                        const double pair = sm_t_[p] * sn_t_[p];
                        gemm_acc(s_np * pair, l, nb, out, d_);
                        gemm_acc_right(-s_np, nb, l, out, d_);
                    } else {
                        gemm_acc(1.0, l, nb, out, d_);
                        gemm_acc_right(-1.0, nb, l, out, d_);
                    }
                }
            }
        }
    }

    Matrix block(const Vector& y, int p) const {
        const int d2 = d_ * d_;
        if (slot_[p] >= 0)
            return Eigen::Map<const Matrix>(y.data() + slot_[p] * d2, d_, d_);
        Matrix m(d_, d_);
        adjoint_into(y.data() + slot_[partner_[p]] * d2, m.data(), d_);
        return m;
    }

    double pairing_residual(const Vector& y) const {
        if (pair_reduction_) return 0.0;
        double res = 0.0;
        for (int p = 0; p < space_->size(); ++p) {
            const Matrix a = block(y, p);
            const Matrix b = block(y, partner_[p]);
            res = std::max(res, (a.adjoint() - b).cwiseAbs().maxCoeff());
        }
        return res;
    }

  private:
    const Complex* fetch(const Vector& y, int p, Complex* scratch) const {
        const int d2 = d_ * d_;
        if (slot_[p] >= 0) return y.data() + slot_[p] * d2;
        adjoint_into(y.data() + slot_[partner_[p]] * d2, scratch, d_);
        return scratch;
    }

    SystemSpec spec_;
    std::shared_ptr<const idx::IndexSpace> space_;
    int d_;
    int channels_;
    bool pair_reduction_;
    std::vector<bcf::Mode> modes_;
    Matrix h_;
    std::vector<Matrix> ls_, ldags_;
    std::vector<Complex> decay_;
    std::vector<int> partner_;
    std::vector<int8_t> sm_t_, sn_t_, sm_p_, sn_p_;
    std::vector<int> kept_;
    std::vector<int> slot_;
};

std::shared_ptr<const idx::IndexSpace> make_pair_space(const SystemSpec& spec,
                                                       std::span<const bcf::Mode> modes,
                                                       const idx::Truncation& truncation) {
    const int j = static_cast<int>(modes.size());
    idx::Truncation doubled = truncation;
    if (doubled.energy) {
        std::vector<Complex> w(2 * j);
        for (int c = 0; c < j; ++c) {
            w[c] = modes[c].w;
            w[j + c] = std::conj(modes[c].w);
        }
        doubled.energy->w = std::move(w);
    }
    if (spec.statistics == Statistics::Bosonic)
        require(!doubled.is_full(), Errc::BosonicUntruncated,
                "bosonic master hierarchy requires truncation");
    return std::make_shared<idx::IndexSpace>(
        idx::build_index_space(2 * j, spec.statistics, doubled));
}

AuxDensitySet rhs_via_equation(const AuxDensitySet& set, const SystemSpec& spec,
                               std::span<const bcf::Mode> modes) {
    require(set.space != nullptr, Errc::InvalidArgument, "aux set without index space");
    MasterEquation eq(spec, modes, set.space, false);
    const int d = eq.dim();
    const int d2 = d * d;
    require(static_cast<int>(set.matrices.size()) == set.space->size(), Errc::LengthMismatch,
            "aux set size does not match its index space");
    Vector y(eq.flat_size()), dy(eq.flat_size());
    for (int p = 0; p < set.space->size(); ++p)
        Eigen::Map<Matrix>(y.data() + p * d2, d, d) = set.matrices[p];
    eq.rhs(y, dy);
    AuxDensitySet out;
    out.space = set.space;
    out.matrices.resize(set.matrices.size());
    for (int p = 0; p < set.space->size(); ++p)
        out.matrices[p] = Eigen::Map<const Matrix>(dy.data() + p * d2, d, d);
    return out;
}

} // namespace

AuxDensitySet master_fermion_rhs(const AuxDensitySet& set, const SystemSpec& spec,
                                 std::span<const bcf::Mode> modes) {
    require(spec.statistics == Statistics::Fermionic, Errc::IncompatibleSolver,
            "fermionic RHS on a non-fermionic spec");
    return rhs_via_equation(set, spec, modes);
}

AuxDensitySet master_boson_rhs(const AuxDensitySet& set, const SystemSpec& spec,
                               std::span<const bcf::Mode> modes) {
    require(spec.statistics == Statistics::Bosonic, Errc::IncompatibleSolver,
            "bosonic RHS on a non-bosonic spec");
    return rhs_via_equation(set, spec, modes);
}

std::shared_ptr<const idx::IndexSpace> build_pair_space(const MasterRun& run) {
    return make_pair_space(run.spec, run.modes, run.truncation);
}

MasterResult propagate_master(const MasterRun& run) {
    const auto start = std::chrono::steady_clock::now();
    auto space = make_pair_space(run.spec, run.modes, run.truncation);
    MasterEquation eq(run.spec, run.modes, space, run.pair_reduction);

    MasterResult result;
    result.space_size = space->size();
    const int stride = std::max(run.output_stride, 1);
    const int d = eq.dim();

    const Vector y0 = eq.initial_state(run.psi0);
    auto rhs = [&eq](double, const Vector& y, Vector& dy) { eq.rhs(y, dy); };
    integrate_observe(rhs, y0, run.grid, run.method, run.tol,
                      [&](int index, double t, const Vector& y) {
                          if (index % stride != 0 && index != run.grid.steps) return;
                          result.times.push_back(t);
                          Matrix rho = eq.block(y, 0);
                          result.trace_drift.push_back(std::abs(rho.trace() - 1.0));
                          result.pairing_residual.push_back(eq.pairing_residual(y));
                          result.rho.push_back(std::move(rho));
                          if (run.keep_aux) {
                              std::vector<Matrix> set(space->size(), Matrix(d, d));
                              for (int p = 0; p < space->size(); ++p) set[p] = eq.block(y, p);
                              result.aux.push_back(std::move(set));
                          }
                      });
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace hqd::master
