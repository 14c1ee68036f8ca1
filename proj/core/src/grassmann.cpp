#include "hqd/grassmann.hpp"

#include <bit>
#include <cmath>
#include <random>

namespace hqd::grassmann {

namespace {

inline int popcount_parity_sign(std::uint32_t bits) {
    return (std::popcount(bits) & 1) ? -1 : 1;
}

// Traits for the three coefficient domains.
template <class Coeff>
struct CoeffOps;

template <>
struct CoeffOps<Complex> {
    static bool is_zero(const Complex& c) { return c == Complex(0.0, 0.0); }
    static Complex conj_adjoint(const Complex& c) { return std::conj(c); }
};

template <>
struct CoeffOps<Vector> {
    static bool is_zero(const Vector& c) { return c.size() == 0 || c.isZero(0.0); }
};

template <>
struct CoeffOps<Matrix> {
    static bool is_zero(const Matrix& c) { return c.size() == 0 || c.isZero(0.0); }
    static Matrix conj_adjoint(const Matrix& c) { return c.adjoint(); }
};

template <class A, class B, class Out, class Combine>
GrassmannElement<Out> mul_impl(const GrassmannElement<A>& a, const GrassmannElement<B>& b,
                               const Out& zero, Combine&& combine) {
    require(a.n_gen == b.n_gen, Errc::AlgebraMismatch, "elements from different algebras");
    GrassmannElement<Out> out;
    out.n_gen = a.n_gen;
    out.coeffs.assign(std::size_t(1) << a.n_gen, zero);
    const std::uint32_t n = std::uint32_t(1) << a.n_gen;
    for (std::uint32_t ma = 0; ma < n; ++ma) {
        if (CoeffOps<A>::is_zero(a.coeffs[ma])) continue;
        for (std::uint32_t mb = 0; mb < n; ++mb) {
            if (ma & mb) continue;
            if (CoeffOps<B>::is_zero(b.coeffs[mb])) continue;
            const int sign = crossing_sign(ma, mb);
            out.coeffs[ma | mb] += static_cast<double>(sign) * combine(a.coeffs[ma], b.coeffs[mb]);
        }
    }
    return out;
}

template <class Coeff>
Coeff zero_like(const GrassmannElement<Coeff>& e) {
    if constexpr (std::is_same_v<Coeff, Complex>) {
        (void)e;
        return Complex(0.0);
    } else {
        for (const auto& c : e.coeffs)
            if (c.size() != 0) return Coeff::Zero(c.rows(), c.cols());
        fail(Errc::InvalidArgument, "element without shaped coefficients");
    }
}

// Mapped mask and reversal/mapping sign of the Grassmann conjugation.
std::pair<std::uint32_t, int> involute_mask(std::uint32_t mask, int n_gen) {
    std::vector<int> mapped;
    for (int g = n_gen - 1; g >= 0; --g) // reversed original order
        if (mask & (1u << g)) mapped.push_back(g ^ 1);
    int inversions = 0;
    for (std::size_t i = 0; i < mapped.size(); ++i)
        for (std::size_t j = i + 1; j < mapped.size(); ++j)
            if (mapped[i] > mapped[j]) ++inversions;
    std::uint32_t out = 0;
    for (int g : mapped) out |= 1u << g;
    return {out, (inversions & 1) ? -1 : 1};
}

template <class Coeff>
GrassmannElement<Coeff> deriv_impl(const GrassmannElement<Coeff>& a, int generator, Side side) {
    require(generator >= 0 && generator < a.n_gen, Errc::InvalidArgument, "generator out of range");
    GrassmannElement<Coeff> out;
    out.n_gen = a.n_gen;
    out.coeffs.assign(a.coeffs.size(), zero_like(a));
    const std::uint32_t bit = 1u << generator;
    const std::uint32_t below = bit - 1;
    for (std::uint32_t m = 0; m < a.coeffs.size(); ++m) {
        if (!(m & bit)) continue;
        if (CoeffOps<Coeff>::is_zero(a.coeffs[m])) continue;
        const std::uint32_t rest = m & ~bit;
        const int sign = side == Side::Left ? popcount_parity_sign(m & below)
                                            : popcount_parity_sign(m & ~below & ~bit);
        out.coeffs[rest] += static_cast<double>(sign) * a.coeffs[m];
    }
    return out;
}

template <class Coeff>
Coeff expect_impl(GrassmannElement<Coeff> work) {
    require(work.n_gen % 2 == 0, Errc::UnpairedGenerators,
            "Gaussian expectation needs paired generators (z_l, zbar_l)");
    const GrassmannAlgebra algebra(work.n_gen);
    for (int l = 0; l < algebra.pair_count(); ++l) {
        const int u = 2 * l, v = 2 * l + 1;
        // Multiply by the weight 1 - zbar z = 1 + eta_{u,v}.
        GrassmannElement<Complex> weight = make_element<Complex>(algebra, Complex(0.0));
        weight.coeffs[0] = 1.0;
        weight.coeffs[(1u << u) | (1u << v)] = 1.0;
        work = g_mul(work, weight);
        work = deriv_impl(work, u, Side::Left); // inner integral dz
        work = deriv_impl(work, v, Side::Left); // outer integral dzbar
    }
    return work.coeffs[0];
}

} // namespace

int crossing_sign(std::uint32_t a, std::uint32_t b) {
    if (a & b) return 0;
    int inversions = 0;
    std::uint32_t rest = b;
    while (rest) {
        const int g = std::countr_zero(rest);
        rest &= rest - 1;
        inversions += std::popcount(a >> (g + 1));
    }
    return (inversions & 1) ? -1 : 1;
}

GrassmannElement<Complex> g_mul(const GrassmannElement<Complex>& a,
                                const GrassmannElement<Complex>& b) {
    return mul_impl(a, b, Complex(0.0), [](const Complex& x, const Complex& y) { return x * y; });
}

GrassmannElement<Vector> g_mul(const GrassmannElement<Complex>& a,
                               const GrassmannElement<Vector>& b) {
    return mul_impl(a, b, zero_like(b),
                    [](const Complex& x, const Vector& y) -> Vector { return x * y; });
}

GrassmannElement<Matrix> g_mul(const GrassmannElement<Complex>& a,
                               const GrassmannElement<Matrix>& b) {
    return mul_impl(a, b, zero_like(b),
                    [](const Complex& x, const Matrix& y) -> Matrix { return x * y; });
}

GrassmannElement<Vector> g_mul(const GrassmannElement<Vector>& a,
                               const GrassmannElement<Complex>& b) {
    return mul_impl(a, b, zero_like(a),
                    [](const Vector& x, const Complex& y) -> Vector { return x * y; });
}

GrassmannElement<Matrix> g_mul(const GrassmannElement<Matrix>& a,
                               const GrassmannElement<Complex>& b) {
    return mul_impl(a, b, zero_like(a),
                    [](const Matrix& x, const Complex& y) -> Matrix { return x * y; });
}

GrassmannElement<Vector> apply_operator(const Matrix& op, const GrassmannElement<Vector>& a) {
    GrassmannElement<Vector> out = a;
    for (auto& c : out.coeffs)
        if (c.size() != 0) c = op * c;
    return out;
}

template <class Coeff>
GrassmannElement<Coeff> g_deriv(const GrassmannElement<Coeff>& a, int generator, Side side) {
    return deriv_impl(a, generator, side);
}

template GrassmannElement<Complex> g_deriv(const GrassmannElement<Complex>&, int, Side);
template GrassmannElement<Vector> g_deriv(const GrassmannElement<Vector>&, int, Side);
template GrassmannElement<Matrix> g_deriv(const GrassmannElement<Matrix>&, int, Side);

GrassmannElement<Complex> involution(const GrassmannElement<Complex>& a) {
    GrassmannElement<Complex> out;
    out.n_gen = a.n_gen;
    out.coeffs.assign(a.coeffs.size(), Complex(0.0));
    for (std::uint32_t m = 0; m < a.coeffs.size(); ++m) {
        if (CoeffOps<Complex>::is_zero(a.coeffs[m])) continue;
        const auto [mapped, sign] = involute_mask(m, a.n_gen);
        out.coeffs[mapped] += static_cast<double>(sign) * std::conj(a.coeffs[m]);
    }
    return out;
}

GrassmannElement<Matrix> involution(const GrassmannElement<Matrix>& a) {
    GrassmannElement<Matrix> out;
    out.n_gen = a.n_gen;
    out.coeffs.assign(a.coeffs.size(), zero_like(a));
    for (std::uint32_t m = 0; m < a.coeffs.size(); ++m) {
        if (CoeffOps<Matrix>::is_zero(a.coeffs[m])) continue;
        const auto [mapped, sign] = involute_mask(m, a.n_gen);
        out.coeffs[mapped] += static_cast<double>(sign) * a.coeffs[m].adjoint();
    }
    return out;
}

GrassmannElement<Matrix> dyad(const GrassmannElement<Vector>& ket,
                              const GrassmannElement<Vector>& bra_state) {
    require(ket.n_gen == bra_state.n_gen, Errc::AlgebraMismatch,
            "dyad of elements from different algebras");
    const Vector proto = [&] {
        for (const auto& c : ket.coeffs)
            if (c.size() != 0) return c;
        fail(Errc::InvalidArgument, "ket without shaped coefficients");
    }();
    const Eigen::Index d = proto.size();
    GrassmannElement<Matrix> out;
    out.n_gen = ket.n_gen;
    out.coeffs.assign(ket.coeffs.size(), Matrix::Zero(d, d));
    for (std::uint32_t mb = 0; mb < bra_state.coeffs.size(); ++mb) {
        if (CoeffOps<Vector>::is_zero(bra_state.coeffs[mb])) continue;
        const auto [mapped, s_inv] = involute_mask(mb, ket.n_gen);
        for (std::uint32_t ma = 0; ma < ket.coeffs.size(); ++ma) {
            if (ma & mapped) continue;
            if (CoeffOps<Vector>::is_zero(ket.coeffs[ma])) continue;
            const int s = s_inv * crossing_sign(ma, mapped);
            out.coeffs[ma | mapped] +=
                static_cast<double>(s) * (ket.coeffs[ma] * bra_state.coeffs[mb].adjoint());
        }
    }
    return out;
}

Complex gaussian_expect(const GrassmannElement<Complex>& a) { return expect_impl(a); }
Vector gaussian_expect(const GrassmannElement<Vector>& a) { return expect_impl(a); }
Matrix gaussian_expect(const GrassmannElement<Matrix>& a) { return expect_impl(a); }

// ----------------------------------------------------------------------
// Hierarchy propagation with symbolic noise.

namespace {

struct HierarchyChannels {
    std::vector<int> sys_channel;
    std::vector<bcf::Mode> modes;    // (|g|^2, i w)
    std::vector<Complex> noise_c;    // Zbar_l(t) = noise_c e^{i w t} zbar_l
    std::vector<double> noise_w;
};

HierarchyChannels expand_channels(const SystemSpec& spec, const oracle::DiscreteBathSpec& bath) {
    require(bath.statistics == Statistics::Fermionic, Errc::IncompatibleSolver,
            "Grassmann propagation applies to fermionic baths");
    require(bath.channels.size() == spec.couplings.size(), Errc::LengthMismatch,
            "one bath channel per coupling operator required");
    HierarchyChannels out;
    for (std::size_t j = 0; j < bath.channels.size(); ++j) {
        const auto& c = bath.channels[j];
        require(c.frequencies.size() == c.couplings.size(), Errc::LengthMismatch,
                "channel frequencies/couplings length mismatch");
        for (std::size_t l = 0; l < c.frequencies.size(); ++l) {
            out.sys_channel.push_back(static_cast<int>(j));
            out.modes.push_back(bcf::Mode{std::norm(c.couplings[l]), I * c.frequencies[l]});
            out.noise_c.push_back(-I * std::conj(c.couplings[l]));
            out.noise_w.push_back(c.frequencies[l]);
        }
    }
    return out;
}

// Flat layout: [hierarchy position][monomial mask][system component].
class PureEquation {
  public:
    PureEquation(const SystemSpec& spec, const HierarchyChannels& ch, bool negate_noise)
        : spec_(validate_system(spec)),
          ch_(ch),
          d_(static_cast<int>(spec_.dim)),
          n_ch_(static_cast<int>(ch.modes.size())),
          algebra_(2 * n_ch_),
          negate_(negate_noise ? -1.0 : 1.0) {
        space_ = std::make_shared<idx::IndexSpace>(
            idx::build_index_space(n_ch_, Statistics::Fermionic, idx::Truncation::full()));
        n_masks_ = algebra_.table_size();
        h_ = spec_.hamiltonian;
        for (const auto& l : spec_.couplings) {
            ls_.push_back(l);
            ldags_.push_back(l.adjoint());
        }
        decay_.resize(space_->size());
        for (int p = 0; p < space_->size(); ++p) {
            Complex acc = 0.0;
            const auto& k = space_->index(p);
            for (int l = 0; l < n_ch_; ++l) acc += static_cast<double>(k[l]) * ch_.modes[l].w;
            decay_[p] = acc;
        }
    }

    const std::shared_ptr<const idx::IndexSpace>& space() const { return space_; }
    const GrassmannAlgebra& algebra() const { return algebra_; }
    Eigen::Index flat_size() const {
        return static_cast<Eigen::Index>(space_->size()) * n_masks_ * d_;
    }

    Vector initial_state(const Vector& psi0) const {
        require(psi0.size() == d_, Errc::DimensionMismatch, "psi0 dimension mismatch");
        Vector y = Vector::Zero(flat_size());
        y.head(d_) = psi0; // position 0, empty monomial
        return y;
    }

    void rhs(double t, const Vector& y, Vector& dy) const {
        dy.setZero();
        std::vector<Complex> phase(n_ch_);
        for (int l = 0; l < n_ch_; ++l)
            phase[l] = negate_ * ch_.noise_c[l] * std::exp(I * ch_.noise_w[l] * t);

        for (int p = 0; p < space_->size(); ++p) {
            const std::size_t base = static_cast<std::size_t>(p) * n_masks_;
            const int s_tot = space_->s_total(p);
            for (std::size_t m = 0; m < n_masks_; ++m) {
                const Complex* src = y.data() + (base + m) * d_;
                Complex* out = dy.data() + (base + m) * d_;
                // -iH psi - (k.w) psi
                for (int col = 0; col < d_; ++col) {
                    const Complex f = src[col];
                    if (f == Complex(0.0, 0.0)) continue;
                    for (int row = 0; row < d_; ++row) out[row] += -I * h_(row, col) * f;
                }
                for (int row = 0; row < d_; ++row) out[row] -= decay_[p] * src[row];
            }
            for (int l = 0; l < n_ch_; ++l) {
                const Matrix& lop = ls_[ch_.sys_channel[l]];
                const Matrix& lop_dag = ldags_[ch_.sys_channel[l]];
                const std::uint32_t gen_bit = 1u << (2 * l + 1); // zbar_l
                // (-1)^{|k|} Zbar_l(t) L psi^{(k)}
                for (std::uint32_t m = 0; m < n_masks_; ++m) {
                    if (m & gen_bit) continue;
                    const Complex* src = y.data() + (base + m) * d_;
                    const int cross = popcount_parity_sign(m & (gen_bit - 1));
                    const Complex c = phase[l] * static_cast<double>(s_tot * cross);
                    Complex* out = dy.data() + (base + (m | gen_bit)) * d_;
                    for (int col = 0; col < d_; ++col) {
                        const Complex f = c * src[col];
                        if (f == Complex(0.0, 0.0)) continue;
                        for (int row = 0; row < d_; ++row) out[row] += lop(row, col) * f;
                    }
                }
                const int s_part = space_->s_partial(p, l);
                if (const int q = space_->down(p, l); q >= 0) {
                    const Complex c = static_cast<double>(s_part) * ch_.modes[l].g;
                    accumulate_block(dy, base, y, static_cast<std::size_t>(q) * n_masks_, lop, c);
                }
                if (const int q = space_->up(p, l); q >= 0) {
                    accumulate_block(dy, base, y, static_cast<std::size_t>(q) * n_masks_, lop_dag,
                                     -static_cast<double>(s_part));
                }
            }
        }
    }

    GrassmannElement<Vector> extract(const Vector& y, int position) const {
        GrassmannElement<Vector> e = make_element<Vector>(algebra_, Vector::Zero(d_));
        const std::size_t base = static_cast<std::size_t>(position) * n_masks_;
        for (std::size_t m = 0; m < n_masks_; ++m)
            e.coeffs[m] = Eigen::Map<const Vector>(y.data() + (base + m) * d_, d_);
        return e;
    }

  private:
    void accumulate_block(Vector& dy, std::size_t dst_base, const Vector& y,
                          std::size_t src_base, const Matrix& op, Complex scale) const {
        for (std::size_t m = 0; m < n_masks_; ++m) {
            const Complex* src = y.data() + (src_base + m) * d_;
            Complex* out = dy.data() + (dst_base + m) * d_;
            for (int col = 0; col < d_; ++col) {
                const Complex f = scale * src[col];
                if (f == Complex(0.0, 0.0)) continue;
                for (int row = 0; row < d_; ++row) out[row] += op(row, col) * f;
            }
        }
    }

    SystemSpec spec_;
    HierarchyChannels ch_;
    int d_;
    int n_ch_;
    GrassmannAlgebra algebra_;
    double negate_;
    std::shared_ptr<const idx::IndexSpace> space_;
    std::size_t n_masks_ = 0;
    Matrix h_;
    std::vector<Matrix> ls_, ldags_;
    std::vector<Complex> decay_;
};

} // namespace

PureFermionicResult propagate_pure_fermionic(const SystemSpec& spec,
                                             const oracle::DiscreteBathSpec& bath,
                                             const TimeGrid& grid, const Vector& psi0,
                                             bool with_negated, Method method, double tol,
                                             int output_stride) {
    const HierarchyChannels ch = expand_channels(spec, bath);
    require(2 * static_cast<int>(ch.modes.size()) <= 24, Errc::TooManyGenerators,
            "discrete bath needs more than 24 Grassmann generators");

    PureFermionicResult result;
    const int stride = std::max(output_stride, 1);
    PureEquation eq(spec, ch, false);
    result.space = eq.space();
    result.algebra = eq.algebra();
    result.sys_channel = ch.sys_channel;
    result.modes = ch.modes;

    auto propagate = [&](bool negate, std::vector<std::vector<GrassmannElement<Vector>>>& out,
                         bool record_times) {
        PureEquation local(spec, ch, negate);
        auto rhs = [&local](double t, const Vector& y, Vector& dy) { local.rhs(t, y, dy); };
        integrate_observe(rhs, local.initial_state(psi0), grid, method, tol,
                          [&](int index, double t, const Vector& y) {
                              if (index % stride != 0 && index != grid.steps) return;
                              if (record_times) result.times.push_back(t);
                              std::vector<GrassmannElement<Vector>> states;
                              states.reserve(local.space()->size());
                              for (int p = 0; p < local.space()->size(); ++p)
                                  states.push_back(local.extract(y, p));
                              out.push_back(std::move(states));
                          });
    };
    propagate(false, result.psi, true);
    if (with_negated) propagate(true, result.psi_tilde, false);
    return result;
}

Matrix aux_density_grassmann(const GrassmannElement<Vector>& psi_m,
                             const GrassmannElement<Vector>& psi_tilde_n) {
    return gaussian_expect(dyad(psi_m, psi_tilde_n));
}

Matrix reduced_density_grassmann(std::span<const GrassmannElement<Vector>> psi_set,
                                 std::span<const GrassmannElement<Vector>> psi_tilde_set) {
    require(!psi_set.empty() && !psi_tilde_set.empty(), Errc::InvalidArgument,
            "empty hierarchy state sets");
    return aux_density_grassmann(psi_set[0], psi_tilde_set[0]);
}

// ----------------------------------------------------------------------
// Identity checks.

namespace {

struct IdentityBath {
    int j = 3;
    std::vector<Complex> g;
    std::vector<double> w;
    GrassmannAlgebra algebra{6};

    GrassmannElement<Complex> zbar(int channel, double t) const {
        auto e = make_element<Complex>(algebra, Complex(0.0));
        e.coeffs[1u << (2 * channel + 1)] = -I * std::conj(g[channel]) * std::exp(I * w[channel] * t);
        return e;
    }
    GrassmannElement<Complex> z(int channel, double t) const {
        auto e = make_element<Complex>(algebra, Complex(0.0));
        e.coeffs[1u << (2 * channel)] = I * g[channel] * std::exp(-I * w[channel] * t);
        return e;
    }
    // Left derivation operator D_j(t); the memory integral realized on the
    // discrete bath.
    GrassmannElement<Matrix> deriv(const GrassmannElement<Matrix>& x, int channel,
                                   double t) const {
        auto d = g_deriv(x, 2 * channel + 1, Side::Left);
        const Complex c = I * g[channel] * std::exp(-I * w[channel] * t);
        for (auto& m : d.coeffs) m *= c;
        return d;
    }
    // Right-derivative companion appearing in the second Novikov variant.
    GrassmannElement<Matrix> deriv_right_bar(const GrassmannElement<Matrix>& x, int channel,
                                             double t) const {
        auto d = g_deriv(x, 2 * channel, Side::Right);
        const Complex c = -I * std::conj(g[channel]) * std::exp(I * w[channel] * t);
        for (auto& m : d.coeffs) m *= c;
        return d;
    }
    GrassmannElement<Matrix> apply_multi(const GrassmannElement<Matrix>& x,
                                         const idx::MultiIndex& k, double t) const {
        // D^k = D_1^{k_1} ... D_J^{k_J} applied as an operator product
        // (highest channel acts first).
        GrassmannElement<Matrix> acc = x;
        for (int channel = j - 1; channel >= 0; --channel)
            for (int rep = 0; rep < k[channel]; ++rep) acc = deriv(acc, channel, t);
        return acc;
    }
};

double max_abs(const GrassmannElement<Matrix>& e) {
    double m = 0.0;
    for (const auto& c : e.coeffs)
        if (c.size() != 0) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
}

GrassmannElement<Matrix> subtract(const GrassmannElement<Matrix>& a,
                                  const GrassmannElement<Matrix>& b) {
    GrassmannElement<Matrix> out = a;
    for (std::size_t m = 0; m < out.coeffs.size(); ++m) out.coeffs[m] -= b.coeffs[m];
    return out;
}

} // namespace

std::vector<IdentityReport> check_identities(int trials, std::uint64_t seed) {
    require(trials >= 1, Errc::InvalidArgument, "need at least one trial");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr int d = 2;

    IdentityReport anticommutator{"anticommutator", 0.0, trials};
    IdentityReport reorder{"reordering", 0.0, trials};
    IdentityReport reorder_left{"reordering-left", 0.0, trials};
    IdentityReport noise_comm{"noise-commutation", 0.0, trials};
    IdentityReport novikov_r{"novikov-right", 0.0, trials};
    IdentityReport novikov_l{"novikov-left", 0.0, trials};

    for (int trial = 0; trial < trials; ++trial) {
        IdentityBath bath;
        bath.g.resize(bath.j);
        bath.w.resize(bath.j);
        for (int c = 0; c < bath.j; ++c) {
            bath.g[c] = Complex(normal(rng), normal(rng));
            bath.w[c] = normal(rng);
        }
        const double t = 0.5 * normal(rng);
        const double s = 0.5 * normal(rng);

        auto random_matrix_element = [&]() {
            auto e = make_element<Matrix>(bath.algebra, Matrix::Zero(d, d));
            for (auto& c : e.coeffs)
                for (int r = 0; r < d; ++r)
                    for (int col = 0; col < d; ++col)
                        c(r, col) = Complex(normal(rng), normal(rng));
            return e;
        };
        auto random_vector_element = [&]() {
            auto e = make_element<Vector>(bath.algebra, Vector::Zero(d));
            for (auto& c : e.coeffs)
                for (int r = 0; r < d; ++r) c(r) = Complex(normal(rng), normal(rng));
            return e;
        };

        const auto x = random_matrix_element();

        // {D_j(t), Zbar_j'(s)} = delta_jj' alpha_j(t - s) on random elements.
        for (int a = 0; a < bath.j; ++a) {
            for (int b = 0; b < bath.j; ++b) {
                const auto zb = bath.zbar(b, s);
                auto anti = g_mul(zb, bath.deriv(x, a, t)); // Zbar D x
                const auto dzx = bath.deriv(g_mul(zb, x), a, t); // D (Zbar x)
                for (std::size_t m = 0; m < anti.coeffs.size(); ++m)
                    anti.coeffs[m] += dzx.coeffs[m];
                const Complex alpha =
                    a == b ? std::norm(bath.g[a]) * std::exp(-I * bath.w[a] * (t - s)) : 0.0;
                auto expected = x;
                for (auto& m : expected.coeffs) m *= alpha;
                anticommutator.max_residual =
                    std::max(anticommutator.max_residual, max_abs(subtract(anti, expected)));
            }
        }

        // Exhaustive binary multi-indices over J = 3.
        for (std::uint32_t bits = 0; bits < 8; ++bits) {
            idx::MultiIndex k(bath.j);
            for (int c = 0; c < bath.j; ++c) k[c] = (bits >> c) & 1;

            for (int channel = 0; channel < bath.j; ++channel) {
                // Reordering: D^k D_j = (-1)^{|k|_j} D^{k+e_j}.
                const auto lhs = bath.apply_multi(bath.deriv(x, channel, t), k, t);
                const auto [s_tot, s_part] = idx::sign_factors(k, channel);
                GrassmannElement<Matrix> rhs;
                if (k[channel] == 1) {
                    rhs = lhs; // both sides vanish; D^{k+e_j} contains D_j^2 = 0
                    for (auto& m : rhs.coeffs) m.setZero();
                } else {
                    idx::MultiIndex up = k;
                    up[channel] += 1;
                    rhs = bath.apply_multi(x, up, t);
                    for (auto& m : rhs.coeffs) m *= static_cast<double>(s_part);
                }
                reorder.max_residual = std::max(reorder.max_residual,
                                                max_abs(subtract(lhs, rhs)));

                // Applying D_j from the LEFT instead costs the prefix parity
                // (-1)^{k_1 + ... + k_{j-1}}: D_j D^k = prefix * D^{k+e_j}.
                // This is the factor the density hierarchy's noise-eliminated
                // terms inherit beyond one channel.
                const auto lhs_left = bath.deriv(bath.apply_multi(x, k, t), channel, t);
                GrassmannElement<Matrix> rhs_left;
                if (k[channel] == 1) {
                    rhs_left = lhs_left;
                    for (auto& m : rhs_left.coeffs) m.setZero();
                } else {
                    idx::MultiIndex up = k;
                    up[channel] += 1;
                    rhs_left = bath.apply_multi(x, up, t);
                    const int prefix = idx::parity_sign(k, 0, static_cast<std::size_t>(channel));
                    for (auto& m : rhs_left.coeffs) m *= static_cast<double>(prefix);
                }
                reorder_left.max_residual = std::max(reorder_left.max_residual,
                                                     max_abs(subtract(lhs_left, rhs_left)));

                // Noise commutation:
                // D^k (Zbar_j x) = (-1)^{|k|} Zbar_j D^k x
                //                  + (-1)^{|k|_j} (k_j mod 2) g_j D^{k-e_j} x.
                const auto zb = bath.zbar(channel, t);
                const auto lhs2 = bath.apply_multi(g_mul(zb, x), k, t);
                auto rhs2 = g_mul(zb, bath.apply_multi(x, k, t));
                for (auto& m : rhs2.coeffs) m *= static_cast<double>(s_tot);
                if (k[channel] == 1) {
                    idx::MultiIndex down = k;
                    down[channel] -= 1;
                    auto extra = bath.apply_multi(x, down, t);
                    const Complex coeff =
                        static_cast<double>(s_part) * std::norm(bath.g[channel]);
                    for (std::size_t m = 0; m < rhs2.coeffs.size(); ++m)
                        rhs2.coeffs[m] += coeff * extra.coeffs[m];
                }
                noise_comm.max_residual = std::max(noise_comm.max_residual,
                                                   max_abs(subtract(lhs2, rhs2)));
            }
        }

        // Novikov, both variants, on random dyads F = |a><b|.
        const auto ket = random_vector_element();
        const auto bra = random_vector_element();
        const auto f = dyad(ket, bra);
        for (int channel = 0; channel < bath.j; ++channel) {
            const Matrix left_side = gaussian_expect(g_mul(f, bath.z(channel, t)));
            const Matrix right_side = gaussian_expect(bath.deriv(f, channel, t));
            novikov_r.max_residual = std::max(
                novikov_r.max_residual, (left_side + right_side).cwiseAbs().maxCoeff());

            const Matrix left2 = gaussian_expect(g_mul(bath.zbar(channel, t), f));
            const Matrix right2 = gaussian_expect(bath.deriv_right_bar(f, channel, t));
            novikov_l.max_residual =
                std::max(novikov_l.max_residual, (left2 + right2).cwiseAbs().maxCoeff());
        }
    }

    return {anticommutator, reorder, reorder_left, noise_comm, novikov_r, novikov_l};
}

} // namespace hqd::grassmann
