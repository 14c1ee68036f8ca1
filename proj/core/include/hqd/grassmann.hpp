// grassmann.hpp — exact finite Grassmann-algebra engine: products, Berezin
// derivatives, Gaussian (coherent-state vacuum) expectations, desk-scale
// propagation of the fermionic pure-state hierarchy with symbolic noise, and
// mechanical verification of the reordering/noise/Novikov identities.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hqd/indexset.hpp"
#include "hqd/integrate.hpp"
#include "hqd/oracle.hpp"
#include "hqd/types.hpp"

namespace hqd::grassmann {

// Generators are indexed 0..n_gen-1; generator 2l is z_l and 2l+1 is zbar_l
// for bath mode l. All signs below derive from this single ordering.
struct GrassmannAlgebra {
    int n_gen = 0;

    explicit GrassmannAlgebra(int n) : n_gen(n) {
        require(n >= 0 && n <= 24, Errc::TooManyGenerators,
                "coefficient table guard: at most 24 generators");
    }
    std::size_t table_size() const { return std::size_t(1) << n_gen; }
    int pair_count() const { return n_gen / 2; }
};

// Dense coefficient table over all 2^N monomial masks (ascending-generator
// ordering within a monomial). Coeff is Complex, Vector, or Matrix; absent
// structure is the all-zero coefficient.
template <class Coeff>
struct GrassmannElement {
    int n_gen = 0;
    std::vector<Coeff> coeffs;

    const Coeff& at(std::uint32_t mask) const { return coeffs[mask]; }
    Coeff& at(std::uint32_t mask) { return coeffs[mask]; }
};

template <class Coeff>
GrassmannElement<Coeff> make_element(const GrassmannAlgebra& algebra, const Coeff& zero_proto) {
    GrassmannElement<Coeff> e;
    e.n_gen = algebra.n_gen;
    e.coeffs.assign(algebra.table_size(), zero_proto);
    return e;
}

// Parity of the number of transpositions needed to interleave monomials a
// and b into ascending order (+1/-1); 0 when they share a generator.
int crossing_sign(std::uint32_t a, std::uint32_t b);

GrassmannElement<Complex> g_mul(const GrassmannElement<Complex>& a,
                                const GrassmannElement<Complex>& b);
GrassmannElement<Vector> g_mul(const GrassmannElement<Complex>& a,
                               const GrassmannElement<Vector>& b);
GrassmannElement<Matrix> g_mul(const GrassmannElement<Complex>& a,
                               const GrassmannElement<Matrix>& b);
GrassmannElement<Vector> g_mul(const GrassmannElement<Vector>& a,
                               const GrassmannElement<Complex>& b);
GrassmannElement<Matrix> g_mul(const GrassmannElement<Matrix>& a,
                               const GrassmannElement<Complex>& b);
// Coefficient-wise matrix action on a vector-valued element.
GrassmannElement<Vector> apply_operator(const Matrix& op, const GrassmannElement<Vector>& a);

enum class Side { Left, Right };

template <class Coeff>
GrassmannElement<Coeff> g_deriv(const GrassmannElement<Coeff>& a, int generator, Side side);

// Grassmann conjugation: anti-automorphism swapping z_l <-> zbar_l, reversing
// monomial order, and conjugating/adjointing coefficients.
GrassmannElement<Complex> involution(const GrassmannElement<Complex>& a);
GrassmannElement<Matrix> involution(const GrassmannElement<Matrix>& a);

// |ket><bra|: multiplies the ket element by the involution of bra_state,
// with outer-product coefficients ket_A * (bra_B)^dag.
GrassmannElement<Matrix> dyad(const GrassmannElement<Vector>& ket,
                              const GrassmannElement<Vector>& bra_state);

// Berezin-Gaussian vacuum average E[.] = int prod_l dzbar_l dz_l
// e^{-sum zbar z} (.), by iterated generator elimination. Requires the
// paired generator layout (even n_gen).
Complex gaussian_expect(const GrassmannElement<Complex>& a);
Vector gaussian_expect(const GrassmannElement<Vector>& a);
Matrix gaussian_expect(const GrassmannElement<Matrix>& a);

// ----------------------------------------------------------------------
// Desk-scale propagation of the fermionic pure-state hierarchy with the
// exact Grassmann-valued noise of a discrete bath. Each bath mode becomes
// one hierarchy channel carrying its system coupling operator.

struct PureFermionicResult {
    std::shared_ptr<const idx::IndexSpace> space; // full fermionic space over all modes
    GrassmannAlgebra algebra{0};
    std::vector<int> sys_channel;   // hierarchy channel -> coupling index
    std::vector<bcf::Mode> modes;   // hierarchy channel modes (|g|^2, i w)
    std::vector<double> times;
    // [time][hierarchy position] -> D-vector-valued element
    std::vector<std::vector<GrassmannElement<Vector>>> psi;
    std::vector<std::vector<GrassmannElement<Vector>>> psi_tilde; // noise negated
};

PureFermionicResult propagate_pure_fermionic(const SystemSpec& spec,
                                             const oracle::DiscreteBathSpec& bath,
                                             const TimeGrid& grid, const Vector& psi0,
                                             bool with_negated = true,
                                             Method method = Method::RK4, double tol = 1e-9,
                                             int output_stride = 1);

// rho^{(m,n)} = E[ |psi^(m)><psi~^(n)| ] for one retained time.
Matrix aux_density_grassmann(const GrassmannElement<Vector>& psi_m,
                             const GrassmannElement<Vector>& psi_tilde_n);

// The reduced state: the (0,0) entry of the above.
Matrix reduced_density_grassmann(std::span<const GrassmannElement<Vector>> psi_set,
                                 std::span<const GrassmannElement<Vector>> psi_tilde_set);

// ----------------------------------------------------------------------
// Mechanical identity checks on random elements over a random discrete bath
// (J = 3 single-mode channels, exhaustive multi-index enumeration).

struct IdentityReport {
    std::string name;
    double max_residual = 0.0;
    int trials = 0;
};

std::vector<IdentityReport> check_identities(int trials, std::uint64_t seed);

} // namespace hqd::grassmann
