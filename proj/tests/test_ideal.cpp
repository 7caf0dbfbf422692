#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gqf/ideal.hpp"
#include "gqf/rng.hpp"

using namespace gqf;

namespace {

FieldPtr Q2() {
    static FieldPtr K = NumberField::real_quadratic(2);
    return K;
}

int tau_of(const FieldPtr& K) { return (K->galois_identity() == 0) ? 1 : 0; }

Ideal princ(const FieldPtr& K, const char* s) { return Ideal::principal(K->parse_element(s)); }

Ideal rand_integral_ideal(const FieldPtr& K, Rng& rng, long range = 6) {
    while (true) {
        std::vector<Rat> c;
        for (int j = 0; j < K->degree(); j++) c.push_back(Rat(rng.next_int(-range, range)));
        FieldElement g = K->element(c);
        if (!g.is_zero()) return Ideal::principal(g);
    }
}

}  // namespace

TEST_CASE("principal squares and norms") {
    auto K = Q2();
    Ideal r2 = princ(K, "w2");
    Ideal two = r2.mul(r2);
    CHECK(two == princ(K, "2"));
    CHECK(r2.norm() == 2);
    CHECK(two.norm() == 4);
}

TEST_CASE("gcd and lcm of split primes above 7") {
    auto K = Q2();
    Ideal a = princ(K, "3+1*w2"), b = princ(K, "3-1*w2");
    CHECK(a.norm() == 7);
    CHECK(b.norm() == 7);
    CHECK(a.gcd(b).is_whole_ring());
    Ideal l = a.intersect(b);
    CHECK(l == princ(K, "7"));
    CHECK(l == a.mul(b));
    // conjugates of rational ideals are stable
    Ideal three = princ(K, "3");
    CHECK(three.norm() == 9);
    CHECK(three.conjugate(tau_of(K)) == three);
    CHECK(a.conjugate(tau_of(K)) == b);
}

TEST_CASE("norm is multiplicative on random ideals") {
    auto K = Q2();
    Rng rng(11);
    for (int t = 0; t < 500; t++) {
        Ideal a = rand_integral_ideal(K, rng), b = rand_integral_ideal(K, rng);
        CHECK(a.mul(b).norm() == a.norm() * b.norm());
    }
}

TEST_CASE("norm lies in the ideal") {
    auto K = Q2();
    Rng rng(12);
    for (int t = 0; t < 100; t++) {
        Ideal a = rand_integral_ideal(K, rng);
        CHECK(a.contains(K->from_rat(Rat(a.norm()))));
    }
}

TEST_CASE("trace dual") {
    auto K = Q2();
    Ideal O = Ideal::whole_ring(K);
    Ideal dual = O.trace_dual();
    // (1/(2 sqrt2)) O = (w2/4) O
    Ideal expect = Ideal::principal(K->element({Rat(0), Rat(1, 4)}));
    CHECK(dual == expect);

    Rng rng(13);
    for (int t = 0; t < 30; t++) {
        Ideal a = rand_integral_ideal(K, rng);
        Ideal ad = a.trace_dual();
        // Tr(x*y) integral for basis pairs
        for (const auto& x : ad.basis_elements())
            for (const auto& y : a.basis_elements()) CHECK(is_integer((x * y).trace()));
        // double dual
        CHECK(ad.trace_dual() == a);
    }
}

TEST_CASE("dual containment reverses inclusion") {
    auto K = Q2();
    Rng rng(14);
    for (int t = 0; t < 40; t++) {
        Ideal a = rand_integral_ideal(K, rng), b = rand_integral_ideal(K, rng);
        Ideal ab = a.mul(b);  // ab subset a
        CHECK(a.contains_ideal(ab));
        CHECK(ab.trace_dual().contains_ideal(a.trace_dual()));
    }
}

TEST_CASE("different ideal of Qsqrt2") {
    auto K = Q2();
    Ideal d = different_ideal(K);
    CHECK(d == princ(K, "2*w2"));
    CHECK(d.norm() == 8);
    CHECK(Rat(d.norm()) == Rat(K->discriminant()));
    // Galois stability
    CHECK(d.conjugate(tau_of(K)) == d);
}

TEST_CASE("denominator ideals") {
    auto K = Q2();
    // gamma = 1/(6 sqrt2) = w2/12
    FieldElement gamma = K->element({Rat(0), Rat(1, 12)});
    Ideal ag = denominator_ideal(gamma);
    CHECK(ag == princ(K, "6*w2"));
    CHECK(ag == princ(K, "3").mul(different_ideal(K)));
    // integral gamma: whole ring
    CHECK(denominator_ideal(K->parse_element("3+1*w2")).is_whole_ring());
    CHECK_THROWS_AS(denominator_ideal(K->zero()), invalid_input);
}

TEST_CASE("colon inverse") {
    auto K = Q2();
    Rng rng(15);
    for (int t = 0; t < 30; t++) {
        Ideal a = rand_integral_ideal(K, rng);
        CHECK(a.inverse().mul(a).is_whole_ring());
    }
}

TEST_CASE("g-invariant ideal") {
    auto K = Q2();
    std::vector<int> G{K->galois_identity(), tau_of(K)};
    CHECK(g_invariant_ideal(princ(K, "3"), G) == princ(K, "3"));
    Ideal gb = g_invariant_ideal(princ(K, "3+1*w2"), G);
    CHECK(gb == princ(K, "7"));
    CHECK(gb.norm() == 49);
    CHECK(g_invariant_ideal(princ(K, "3+1*w2"), {K->galois_identity()}) == princ(K, "3+1*w2"));
}

TEST_CASE("prime factorization in Qsqrt2") {
    auto K = Q2();
    auto f7 = factor_prime(K, 7);
    REQUIRE(f7.size() == 2);
    CHECK(f7[0].e == 1);
    CHECK(f7[0].f == 1);
    CHECK(f7[0].prime.norm() == 7);
    CHECK(f7[1].prime.norm() == 7);
    CHECK(f7[0].prime != f7[1].prime);

    auto f3 = factor_prime(K, 3);
    REQUIRE(f3.size() == 1);
    CHECK(f3[0].e == 1);
    CHECK(f3[0].f == 2);
    CHECK(f3[0].prime == princ(K, "3"));

    auto f2 = factor_prime(K, 2);
    REQUIRE(f2.size() == 1);
    CHECK(f2[0].e == 2);
    CHECK(f2[0].f == 1);
    CHECK(f2[0].prime == princ(K, "w2"));
}

TEST_CASE("prime factorization in the cyclic cubic") {
    FieldDesc desc;
    desc.min_poly = {-1, -2, 1, 1};
    desc.basis = {{Rat(1), Rat(0), Rat(0)}, {Rat(0), Rat(1), Rat(0)}, {Rat(0), Rat(0), Rat(1)}};
    desc.galois_perms = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
    FieldPtr K = NumberField::from_description(desc);
    // 7 ramifies totally (conductor 7); 13 splits or stays inert uniformly (Galois)
    auto f7 = factor_prime(K, 7);
    CHECK(f7.size() == 1);
    CHECK(f7[0].e == 3);
    CHECK(f7[0].f == 1);
    auto f13 = factor_prime(K, 13);
    int efr = 0;
    for (auto& pf : f13) efr += pf.e * pf.f;
    CHECK(efr == 3);
}

TEST_CASE("ideal factorization and moebius") {
    auto K = Q2();
    Ideal b = princ(K, "3").mul(princ(K, "3+1*w2"));
    auto fact = factor_ideal(b);
    CHECK(fact.size() == 2);
    CHECK(moebius(b) == 1);
    CHECK(moebius(princ(K, "3"))== -1);
    CHECK(moebius(princ(K, "9"))== 0);
    auto divs = divisors(b);
    CHECK(divs.size() == 4);
}

TEST_CASE("ideals_between matches divisors for the different") {
    auto K = Q2();
    Ideal d = different_ideal(K);
    auto between = ideals_between(d);
    auto divs = divisors(d);
    CHECK(between.size() == divs.size());  // (sqrt2)^3: 4 divisors
    for (const auto& dv : divs) {
        bool found = false;
        for (const auto& bt : between)
            if (bt == dv) found = true;
        CHECK(found);
    }
}

TEST_CASE("residue classes") {
    auto K = Q2();
    ResidueRing R3(princ(K, "3"));
    CHECK(R3.size() == 9);
    CHECK(R3.units().size() == 8);

    ResidueRing Rp(princ(K, "3+1*w2"));
    CHECK(Rp.size() == 7);
    CHECK(Rp.units().size() == 6);

    // arithmetic sanity: a*(b+c) = a*b + a*c on indices
    Rng rng(31);
    for (int t = 0; t < 100; t++) {
        long a = long(rng.next_below(9)), b = long(rng.next_below(9)), c = long(rng.next_below(9));
        CHECK(R3.mul(a, R3.add(b, c)) == R3.add(R3.mul(a, b), R3.mul(a, c)));
    }
    // inverses
    for (long u : R3.units()) {
        long v = R3.inv(u);
        CHECK(R3.mul(u, v) == R3.index_of(K->one()));
    }
}

TEST_CASE("crt reconstruction hits all classes") {
    auto K = Q2();
    Ideal b1 = princ(K, "3"), b2 = princ(K, "3+1*w2");
    auto [a1, a2] = crt_split(b1, b2);
    // ord conditions
    CHECK(b1.contains(a1));
    CHECK(!b1.mul(b1).contains(a1));
    CHECK(b2.contains(a2));
    Ideal b = b1.mul(b2);
    ResidueRing R(b);
    ResidueRing R1(b1), R2(b2);
    std::set<long> seen;
    for (long mu = 0; mu < R2.size(); mu++)
        for (long beta = 0; beta < R1.size(); beta++) {
            FieldElement x =
                a1 * R2.rep_element(mu) + a2 * R1.rep_element(beta);
            seen.insert(R.index_of(x));
        }
    CHECK(long(seen.size()) == R.size());  // 63 classes exactly once
}

TEST_CASE("valuations") {
    auto K = Q2();
    Ideal p = factor_prime(K, 7)[0].prime;
    Ideal b = p.pow(3);
    CHECK(ord_p(p, b) == 3);
    CHECK(ord_p(p, Ideal::whole_ring(K)) == 0);
    // element valuation incl. denominators
    FieldElement x = K->from_rat(Rat(7));
    CHECK(ord_p(p, x) == 1);
    CHECK(ord_p(p, x.inverse()) == -1);
}
