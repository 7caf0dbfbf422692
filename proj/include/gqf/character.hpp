#ifndef GQF_CHARACTER_HPP
#define GQF_CHARACTER_HPP

#include <complex>

#include "gqf/ideal.hpp"

namespace gqf {

using Cplx = std::complex<double>;

// Compensated complex accumulator for sums with many unit-modulus terms.
class KahanSum {
  public:
    void add(Cplx v) {
        add_part(re_, cre_, v.real());
        add_part(im_, cim_, v.imag());
    }
    Cplx value() const { return {re_, im_}; }

  private:
    static void add_part(double& s, double& c, double v) {
        double y = v - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double re_ = 0, im_ = 0, cre_ = 0, cim_ = 0;
};

// Exact fractional part of Tr(x): the full phase of psi(x) as a rational
// in [0, 1). All round-off lives in one exp() call per term.
Rat psi_phase(const FieldElement& x);

// psi(x) = exp(2 pi i Tr(x)).
Cplx psi(const FieldElement& x);

// e(2 pi i q) for an exact rational phase.
Cplx unit_phase(const Rat& q);

// gamma = g/alpha together with the F(b) certificate of the construction
// lemma: (alpha) = b*d*p1, g = Nm(nu) for nu in p1 coprime to all b^tau*d,
// and a_gamma = b*e with e | d, (d/e, b) = 1.
struct PrimitiveCharacter {
    Ideal modulus;
    FieldElement gamma;
    FieldElement alpha;
    Int g;
    Ideal p1;
    Ideal e;
};

// Denominator-ideal criterion: a_gamma = b*e for some e | d with (d/e, b) = 1.
bool is_primitive(const FieldElement& gamma, const Ideal& b);

// Searches growing coordinate boxes for a certified gamma in F(b).
// Throws search_exhausted with the attempted bound on failure.
PrimitiveCharacter find_primitive_gamma(const Ideal& b, int box_cap = 64);

// Sum over all primitive characters mod b at x:
// sum_{a in (o/b)^*} psi(gamma a x).
Cplx primitive_char_sum(const PrimitiveCharacter& chi, const FieldElement& x);

}  // namespace gqf

#endif
