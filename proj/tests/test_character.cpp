#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gqf/character.hpp"
#include "gqf/rng.hpp"

using namespace gqf;

namespace {

FieldPtr Q2() {
    static FieldPtr K = NumberField::real_quadratic(2);
    return K;
}

Ideal princ(const FieldPtr& K, const char* s) { return Ideal::principal(K->parse_element(s)); }

// Brute-force primitivity: psi(gamma .) must be a character mod b but not
// mod any strictly larger ideal (independent oracle for the criterion).
bool primitive_bruteforce(const FieldElement& gamma, const Ideal& b) {
    const FieldPtr& K = b.field();
    Ideal dual_o = Ideal::whole_ring(K).trace_dual();
    Ideal gb = Ideal::principal(gamma).mul(b);
    if (!dual_o.contains_ideal(gb)) return false;  // not even a character mod b
    for (const Ideal& b1 : ideals_between(b)) {
        if (b1 == b) continue;
        if (dual_o.contains_ideal(Ideal::principal(gamma).mul(b1))) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("psi basics") {
    auto K = Q2();
    Rng rng(3);
    for (int t = 0; t < 50; t++) {
        std::vector<Rat> c{Rat(rng.next_int(-9, 9)), Rat(rng.next_int(-9, 9))};
        FieldElement a = K->element(c);
        CHECK(std::abs(psi(a) - Cplx(1, 0)) < 1e-12);  // integral trace
    }
    // Tr((1/(2 sqrt2)) * sqrt2) = Tr(1/2) = 1
    FieldElement g = K->element({Rat(0), Rat(1, 4)});
    CHECK(std::abs(psi(g * K->parse_element("w2")) - Cplx(1, 0)) < 1e-12);
    // psi(x) psi(-x) = 1
    for (int t = 0; t < 50; t++) {
        std::vector<Rat> c{frac(rng.next_int(-9, 9), 7), frac(rng.next_int(-9, 9), 5)};
        FieldElement x = K->element(c);
        CHECK(std::abs(psi(x) * psi(-x) - Cplx(1, 0)) < 1e-14);
    }
}

TEST_CASE("is_primitive matches examples") {
    auto K = Q2();
    // gamma = 1/(6 sqrt2): a_gamma = (3)(2 sqrt2) = b*d with b=(3), e=d
    FieldElement gamma = K->element({Rat(0), Rat(1, 12)});
    CHECK(is_primitive(gamma, princ(K, "3")));
    // integral gamma: trivial character, never primitive
    CHECK(!is_primitive(K->parse_element("1+1*w2"), princ(K, "3")));
    // gamma = 1/3: a_gamma = (3), e = O fails the divisor test against d
    CHECK(is_primitive(K->from_rat(Rat(1, 3)), princ(K, "3")) ==
          primitive_bruteforce(K->from_rat(Rat(1, 3)), princ(K, "3")));
}

TEST_CASE("is_primitive agrees with brute force on small ideals") {
    auto K = Q2();
    Rng rng(17);
    std::vector<Ideal> moduli;
    for (long n = 2; moduli.size() < 12; n++) {
        for (int b2 = -2; b2 <= 2; b2++) {
            FieldElement g = K->element({Rat(n), Rat(b2)});
            if (g.is_zero()) continue;
            Ideal I = Ideal::principal(g);
            if (I.is_whole_ring()) continue;
            if (I.norm() > 200) continue;
            moduli.push_back(I);
            if (moduli.size() >= 12) break;
        }
    }
    int checked = 0;
    for (const Ideal& b : moduli) {
        for (int t = 0; t < 8; t++) {
            // random gamma with denominator dividing 12 b
            std::vector<Rat> c{frac(rng.next_int(-20, 20), 1 + rng.next_int(0, 11)),
                               frac(rng.next_int(-20, 20), 1 + rng.next_int(0, 11))};
            FieldElement gamma = K->element(c);
            if (gamma.is_zero()) continue;
            CHECK(is_primitive(gamma, b) == primitive_bruteforce(gamma, b));
            checked++;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("find_primitive_gamma certificates and orthogonality") {
    auto K = Q2();
    for (const char* mod : {"3", "3+1*w2", "5", "1+2*w2", "9"}) {
        Ideal b = princ(K, mod);
        PrimitiveCharacter chi = find_primitive_gamma(b);
        // certificate recomputation
        Ideal d = different_ideal(K);
        CHECK(Ideal::principal(chi.alpha) == b.mul(d).mul(chi.p1));
        CHECK(denominator_ideal(chi.gamma) == b.mul(chi.e));
        CHECK(is_primitive(chi.gamma, b));
        CHECK(primitive_bruteforce(chi.gamma, b));
        // nontrivial character sums to zero over o/b
        ResidueRing R(b);
        KahanSum s;
        for (long i = 0; i < R.size(); i++) s.add(psi(chi.gamma * R.rep_element(i)));
        CHECK(std::abs(s.value()) < 1e-9 * double(R.size()));
    }
}

TEST_CASE("primitive_char_sum special values") {
    auto K = Q2();
    Ideal p = princ(K, "3+1*w2");  // degree-1 prime, norm 7
    PrimitiveCharacter chi = find_primitive_gamma(p);
    // x = 0: all terms 1
    CHECK(std::abs(primitive_char_sum(chi, K->zero()) - Cplx(6, 0)) < 1e-9);
    // x not in p: Ramanujan value -1
    CHECK(std::abs(primitive_char_sum(chi, K->one()) - Cplx(-1, 0)) < 1e-9);
    // x in p, x != 0: N(p) - 1
    CHECK(std::abs(primitive_char_sum(chi, K->parse_element("3+1*w2")) - Cplx(6, 0)) < 1e-9);

    // Moebius cross-check on a composite modulus: sum = sum_{c | b} mu(b/c) Nc [x in c]
    Ideal b = princ(K, "3").mul(p);
    PrimitiveCharacter chib = find_primitive_gamma(b);
    for (const char* xs : {"0", "1", "3", "7", "3+1*w2", "21+7*w2"}) {
        FieldElement x = K->parse_element(xs);
        Cplx lhs = primitive_char_sum(chib, x);
        Rat rhs = 0;
        for (const Ideal& c : divisors(b)) {
            Ideal cof = b.mul(c.inverse());
            int mu = moebius(cof);
            if (mu != 0 && (x.is_zero() || c.contains(x))) rhs += Rat(mu) * Rat(c.norm());
        }
        CHECK(std::abs(lhs - Cplx(to_double(rhs), 0)) < 1e-8);
    }
}

TEST_CASE("gamma independence of character sums") {
    auto K = Q2();
    Ideal b = princ(K, "5");
    PrimitiveCharacter c1 = find_primitive_gamma(b, 8);
    PrimitiveCharacter c2 = find_primitive_gamma(b, 64);
    if (c1.gamma == c2.gamma) {
        // force a different certificate by searching from a bigger box only
        WARN("identical gamma found; independence vacuous here");
    }
    Rng rng(9);
    for (int t = 0; t < 10; t++) {
        FieldElement x = K->element({Rat(rng.next_int(-10, 10)), Rat(rng.next_int(-10, 10))});
        Cplx s1 = primitive_char_sum(c1, x), s2 = primitive_char_sum(c2, x);
        CHECK(std::abs(s1 - s2) <= 1e-8 * (1 + std::abs(s1)));
    }
}
