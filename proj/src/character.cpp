#include "gqf/character.hpp"

#include <cmath>

namespace gqf {

Rat psi_phase(const FieldElement& x) {
    Rat t = x.trace();
    Int fl;
    mpz_fdiv_q(fl.get_mpz_t(), t.get_num().get_mpz_t(), t.get_den().get_mpz_t());
    return t - Rat(fl);
}

Cplx unit_phase(const Rat& q) {
    double angle = 2.0 * M_PI * to_double(q);
    return {std::cos(angle), std::sin(angle)};
}

Cplx psi(const FieldElement& x) { return unit_phase(psi_phase(x)); }

bool is_primitive(const FieldElement& gamma, const Ideal& b) {
    if (!b.is_integral() || b.is_whole_ring() || b.norm() == 0)
        throw invalid_input("is_primitive: modulus must be a proper nonzero integral ideal");
    if (gamma.is_zero()) return false;
    const FieldPtr& K = b.field();
    Ideal d = different_ideal(K);
    Ideal ag = denominator_ideal(gamma);
    for (const Ideal& e : ideals_between(d)) {
        if (ag != b.mul(e)) continue;
        Ideal d_over_e = d.mul(e.inverse());
        if (!d_over_e.is_integral()) continue;
        if (d_over_e.coprime_to(b)) return true;
    }
    return false;
}

PrimitiveCharacter find_primitive_gamma(const Ideal& b, int box_cap) {
    if (!b.is_integral() || b.is_whole_ring())
        throw invalid_input("find_primitive_gamma: modulus must be a proper integral ideal");
    const FieldPtr& K = b.field();
    Ideal d = different_ideal(K);
    Ideal c = b.mul(d);

    std::vector<Ideal> c_conjugates;
    for (int t = 0; t < K->galois_count(); t++) c_conjugates.push_back(c.conjugate(t));

    PrimitiveCharacter out;
    out.modulus = b;

    // alpha in bd with (alpha) = bd p1, p1 prime coprime to all (bd)^tau.
    auto alpha_ok = [&](const FieldElement& alpha) {
        Ideal q = Ideal::principal(alpha).mul(c.inverse());
        if (!q.is_integral()) return false;
        Int nq = q.norm();
        if (nq == 1) return false;
        if (mpz_probab_prime_p(nq.get_mpz_t(), 30) == 0) return false;  // degree-1 primes only
        for (const Ideal& ct : c_conjugates)
            if (!q.coprime_to(ct)) return false;
        out.p1 = q;
        return true;
    };
    auto alpha = search_ideal_element(c, alpha_ok, box_cap);
    if (!alpha)
        throw search_exhausted("find_primitive_gamma: no suitable alpha within box bound " +
                               std::to_string(box_cap));
    out.alpha = *alpha;

    // nu in p1 with (nu) coprime to all c^tau; then g = Nm(nu).
    auto nu_ok = [&](const FieldElement& nu) {
        Ideal n = Ideal::principal(nu);
        for (const Ideal& ct : c_conjugates)
            if (!n.coprime_to(ct)) return false;
        return true;
    };
    auto nu = search_ideal_element(out.p1, nu_ok, box_cap);
    if (!nu)
        throw search_exhausted("find_primitive_gamma: no suitable nu within box bound " +
                               std::to_string(box_cap));
    Rat gnorm = nu->norm();
    out.g = gnorm.get_num();  // integral element: integer norm

    out.gamma = K->from_rat(Rat(out.g)) * out.alpha.inverse();

    // Certificate: a_gamma = b*e with e | d and (d/e, b) = 1. The proof of
    // the construction lemma gives e = d itself.
    Ideal ag = denominator_ideal(out.gamma);
    if (ag != c)
        throw error("find_primitive_gamma: denominator ideal is not b*d");
    out.e = d;
    if (!is_primitive(out.gamma, b))
        throw error("find_primitive_gamma: certificate failed the primitivity criterion");
    return out;
}

Cplx primitive_char_sum(const PrimitiveCharacter& chi, const FieldElement& x) {
    ResidueRing R(chi.modulus);
    KahanSum acc;
    for (long u : R.units()) acc.add(psi(chi.gamma * R.rep_element(u) * x));
    return acc.value();
}

}  // namespace gqf
