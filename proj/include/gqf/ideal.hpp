#ifndef GQF_IDEAL_HPP
#define GQF_IDEAL_HPP

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "gqf/number_field.hpp"

namespace gqf {

// Fractional ideal of o_K as a full-rank lattice (1/den) * colspan(mat),
// with mat a d x d integer matrix in canonical column HNF and den the
// smallest positive denominator. (mat, den) is the equality certificate.
class Ideal {
  public:
    Ideal() = default;

    static Ideal whole_ring(const FieldPtr& K);
    static Ideal principal(const FieldElement& g);               // throws on 0
    static Ideal from_generators(const FieldPtr& K, const std::vector<FieldElement>& gens);
    // Raw lattice constructor; validates the o-module property.
    static Ideal from_lattice(const FieldPtr& K, const ZMat& columns, const Int& den);

    const FieldPtr& field() const { return field_; }
    const ZMat& mat() const { return mat_; }
    const Int& den() const { return den_; }
    bool is_integral() const { return den_ == 1; }
    bool is_whole_ring() const;

    Int norm() const;        // integral ideals only
    Rat norm_rat() const;    // general fractional norm

    Ideal mul(const Ideal& o) const;
    Ideal gcd(const Ideal& o) const;        // a + b
    Ideal intersect(const Ideal& o) const;  // lcm
    Ideal conjugate(int tau) const;
    Ideal inverse() const;                  // (O : a)
    Ideal colon(const Ideal& b) const;      // (a : b) = {x : x b <= a}
    Ideal trace_dual() const;               // {x : Tr(x a) <= Z}
    Ideal pow(int k) const;                 // k >= 0

    bool contains(const FieldElement& x) const;
    bool contains_ideal(const Ideal& o) const;  // o subset of this
    bool coprime_to(const Ideal& o) const;
    bool operator==(const Ideal& o) const;
    bool operator!=(const Ideal& o) const { return !(*this == o); }

    // Basis columns as field elements.
    std::vector<FieldElement> basis_elements() const;

  private:
    static Ideal make_canonical(FieldPtr K, const ZMat& columns, Int den, bool check_module);
    FieldPtr field_;
    ZMat mat_;
    Int den_ = 1;
};

Ideal different_ideal(const FieldPtr& K);
Ideal denominator_ideal(const FieldElement& gamma);  // {a in o : a*gamma in o}; gamma != 0

// Intersection of b^{tau^-1} over tau in G (indices into K->galois()).
Ideal g_invariant_ideal(const Ideal& b, const std::vector<int>& G);

struct PrimeFactor {
    Ideal prime;
    int e;  // ramification
    int f;  // residue degree
};

// Splitting of a rational prime via the Kummer-Dedekind criterion;
// requires p coprime to the index [o : Z[theta]].
std::vector<PrimeFactor> factor_prime(const FieldPtr& K, const Int& p);

// Index [o : Z[theta]] from disc(min_poly) / D_K.
Int power_basis_index(const FieldPtr& K);

// Valuation of a fractional ideal / element at a prime ideal.
int ord_p(const Ideal& prime, const Ideal& a);
int ord_p(const Ideal& prime, const FieldElement& x);  // x != 0

// Factorization of an integral ideal over primes above its norm.
// Throws unsupported_prime when some p divides the power basis index.
std::vector<std::pair<Ideal, int>> factor_ideal(const Ideal& b);

// All integral ideals dividing b (i.e. between b and o), via factorization.
std::vector<Ideal> divisors(const Ideal& b);

// o-module lattices L with a <= L <= o, enumerated directly from HNF
// candidates. Works at any prime, used for divisor enumeration of the
// different and as the brute-force primitivity oracle.
std::vector<Ideal> ideals_between(const Ideal& a);

// Moebius function of an integral ideal (needs factorization).
int moebius(const Ideal& b);

// All integral ideals of norm in [2, bound], by direct HNF enumeration
// (no factorization), sorted by norm.
std::vector<Ideal> ideals_of_norm_up_to(const FieldPtr& K, long bound);

// CRT elements: alpha1, alpha2 with ord_p(alpha_i) = ord_p(b_i) for all
// p | b1*b2, found by bounded search (lemma skinner-3 inputs).
std::pair<FieldElement, FieldElement> crt_split(const Ideal& b1, const Ideal& b2,
                                                int box_cap = 64);

// Bounded geometric box search over elements of an ideal; returns the first
// element (nonzero) satisfying pred, ordered by box radius.
std::optional<FieldElement> search_ideal_element(
    const Ideal& a, const std::function<bool(const FieldElement&)>& pred, int box_cap = 64);

// Residue system o/b for an integral ideal b: canonical box representatives
// from the HNF diagonal, mixed-radix indexing, unit filtering.
class ResidueRing {
  public:
    explicit ResidueRing(Ideal b, long size_cap = 20000000L);

    const Ideal& modulus() const { return b_; }
    long size() const { return n_; }

    std::vector<Int> rep(long idx) const;
    FieldElement rep_element(long idx) const;
    long index_of(const std::vector<Int>& coords) const;  // reduces first
    long index_of(const FieldElement& x) const;           // x integral

    long add(long i, long j) const;
    long mul(long i, long j) const;
    long neg(long i) const;

    bool is_unit(long idx) const;
    const std::vector<long>& units() const;  // lazily built, cached

    // Multiplicative inverse index; throws invalid_input for non-units.
    long inv(long idx) const;

  private:
    Ideal b_;
    std::vector<long> diag_;
    long n_ = 0;
    mutable std::vector<long> units_;
};

}  // namespace gqf

#endif
