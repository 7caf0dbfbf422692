#ifndef GQF_EXPSUMS_HPP
#define GQF_EXPSUMS_HPP

#include "gqf/character.hpp"
#include "gqf/descent.hpp"
#include "gqf/form.hpp"
#include "gqf/ideal.hpp"

namespace gqf {

// The lattice H_b = {h in o^n : 2B(a;h) in b for all a}, as a dn x dn HNF
// under coordinate flattening, with its two indices.
struct HLattice {
    FieldPtr field;
    int n = 0;
    ZMat basis;        // dn x dn column HNF
    Int index_top;     // |o^n / H_b|
    Int index_bottom;  // |H_b / (^Gb)^n|

    bool contains(const std::vector<Int>& u) const { return solve_hnf(basis, u).has_value(); }
};

HLattice h_lattice(const GQF& F, const Ideal& b);

// The G-invariant ideal of b for the automorphisms appearing in F.
Ideal g_ideal(const GQF& F, const Ideal& b);

struct SSumResult {
    Cplx value;
    Int units;      // |(o/b)^*|
    Int norm_b;     // Nb
    Int norm_gb;    // N(^Gb)
    double bound;   // |(o/b)^*| |H_b/(^Gb)^n|^(1/2) N(^Gb)^(n/2)
};

// Complete exponential sum S_b(N; m) via a certified primitive character.
// m entries must lie in the dual of ^Gb; b must be a proper integral ideal.
SSumResult s_sum_gamma(const GQF& F, const Ideal& b, const FieldElement& N,
                       const std::vector<FieldElement>& m, long budget = 30000000L);

// Independent evaluator by Moebius inversion of the full character sum;
// needs b to factor over supported primes.
Cplx s_sum_moebius(const GQF& F, const Ideal& b, const FieldElement& N,
                   const std::vector<FieldElement>& m, long budget = 30000000L);

struct MultReport {
    Cplx lhs;   // S_b(N; m)
    Cplx rhs;   // S_b1(..) * S_b2(..)
    double rel_diff;
};

// Checks S_b(N;m) = S_b1(inv(Nb2)^2 N; Nb2 m) S_b2(inv(Nb1)^2 N; Nb1 m)
// for b = b1 b2 with coprime norms.
MultReport verify_multiplicativity(const GQF& F, const Ideal& b1, const Ideal& b2,
                                   const FieldElement& N, const std::vector<FieldElement>& m);

// Gauss sum tau_p = sum_{u mod p} psi(gamma u^2) for a degree-1 unramified
// odd prime; |tau_p| = sqrt(Np).
Cplx gauss_sum(const Ideal& p);

// sum_{a in (o/p)^*} chi(a)^e psi(gamma (a A + a^-1 B)): Kloosterman for
// even e, Salie for odd e, with chi the quadratic character mod p.
Cplx kloosterman_salie(const Ideal& p, const FieldElement& A, const FieldElement& B,
                       int chi_exponent);

struct SigmaDecomposition {
    Cplx sigma0;
    Cplx recomposed;   // Sigma0 * sum_a psi(-gamma a gbar^2 N) Sigma1(a) Sigma2(a)
    Cplx direct;       // s_sum_gamma reference value
    double rel_diff;
    double theta;        // exponent theta_p(v): 1 or 1/2
    double bound_ratio;  // |S| / Np^(theta + (3n-m)/2)
};

// Degree-1 prime decomposition of S_p(N; v) for diagonal special shapes.
// Requires p of residue degree 1, p distinct from its tau-conjugate, and
// p coprime to 2 and all diagonal coefficients.
SigmaDecomposition sigma_decomposition(const GQF& F, const Ideal& p, const FieldElement& N,
                                       const std::vector<FieldElement>& v);

// A vector m in the dual of (^Gb)^n with m.h not integral against the
// different for some h in H_b (the vanishing-lemma certificate), if one
// exists within the search budget.
std::optional<std::vector<FieldElement>> violating_m(const GQF& F, const Ideal& b,
                                                     const HLattice& H, int tries = 2000,
                                                     uint64_t seed = 1);

}  // namespace gqf

#endif
