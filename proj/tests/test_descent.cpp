#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gqf/descent.hpp"
#include "gqf/rng.hpp"

using namespace gqf;

namespace {

FieldPtr Q2() {
    static FieldPtr K = NumberField::real_quadratic(2);
    return K;
}

FieldPtr C3() {
    FieldDesc desc;
    desc.min_poly = {-1, -2, 1, 1};
    desc.basis = {{Rat(1), Rat(0), Rat(0)}, {Rat(0), Rat(1), Rat(0)}, {Rat(0), Rat(0), Rat(1)}};
    desc.galois_perms = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
    static FieldPtr K = NumberField::from_description(desc);
    return K;
}

int tau_of(const FieldPtr& K) { return (K->galois_identity() == 0) ? 1 : 0; }

GQF rand_gqf(const FieldPtr& K, int n, Rng& rng, long r = 3) {
    int g = K->galois_count();
    std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, K->zero());
    auto at = [&](int i, int ti, int j, int tj) -> FieldElement& {
        return c[((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj)];
    };
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < g; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < g; tj++) {
                    if (size_t(i) * g + size_t(ti) > size_t(j) * g + size_t(tj)) continue;
                    std::vector<Rat> cc;
                    for (int k = 0; k < K->degree(); k++)
                        cc.push_back(frac(rng.next_int(-r, r), 1 + rng.next_int(0, 2)));
                    FieldElement e = K->element(cc);
                    at(i, ti, j, tj) = e;
                    at(j, tj, i, ti) = e;
                }
    return GQF::from_coeffs(K, n, std::move(c));
}

DescendedSystem rand_system(const FieldPtr& K, int n, Rng& rng, long r = 4) {
    DescendedSystem S;
    S.field = K;
    S.n = n;
    const int N = K->degree() * n;
    for (int p = 0; p < K->degree(); p++) {
        QMat M(N, N);
        for (int i = 0; i < N; i++)
            for (int j = i; j < N; j++) {
                Rat v = frac(rng.next_int(-r, r), 1 + rng.next_int(0, 2));
                M.at(i, j) = v;
                M.at(j, i) = v;
            }
        S.forms.push_back(M);
    }
    return S;
}

std::vector<FieldElement> rand_integral_vec(const FieldPtr& K, int n, Rng& rng, long r = 4) {
    std::vector<FieldElement> v;
    for (int i = 0; i < n; i++) {
        std::vector<Rat> c;
        for (int j = 0; j < K->degree(); j++) c.push_back(Rat(rng.next_int(-r, r)));
        v.push_back(K->element(c));
    }
    return v;
}

}  // namespace

TEST_CASE("paper display: diagonal form over Qsqrt2") {
    auto K = Q2();
    int tau = tau_of(K);
    const int n = 3, m = 2;
    long av[n] = {2, -1, 3}, bv[m] = {1, 4};
    std::vector<FieldElement> a, b;
    for (long v : av) a.push_back(K->from_rat(Rat(v)));
    for (long v : bv) b.push_back(K->from_rat(Rat(v)));
    DescendedSystem S = descend(make_diagonal(a, b, tau));

    QMat M1(2 * n, 2 * n), M2(2 * n, 2 * n);
    for (int i = 0; i < n; i++) {
        long ai = av[i], bi = (i < m) ? bv[i] : 0;
        M1.at(i, i) = Rat(ai + bi);
        M1.at(n + i, n + i) = Rat(2 * (ai + bi));
        M2.at(i, n + i) = Rat(ai - bi);
        M2.at(n + i, i) = Rat(ai - bi);
    }
    CHECK(S.forms[0] == M1);
    CHECK(S.forms[1] == M2);
}

TEST_CASE("standard quadratic form produces block structure") {
    auto K = Q2();
    GQF F = make_diagonal({K->one(), K->from_rat(5)}, {}, tau_of(K));
    DescendedSystem S = descend(F);
    // Q_p must have no coupling between different K-variables
    for (const QMat& M : S.forms)
        for (int i = 0; i < 2; i++)
            for (int j = 0; j < 2; j++)
                if (i != j) {
                    CHECK(M.at(i, j) == 0);
                    CHECK(M.at(2 + i, 2 + j) == 0);
                    CHECK(M.at(i, 2 + j) == 0);
                }
    // zero form
    DescendedSystem Z = descend(F.scaled(0));
    for (const QMat& M : Z.forms)
        for (int i = 0; i < M.rows(); i++)
            for (int j = 0; j < M.cols(); j++) CHECK(M.at(i, j) == 0);
}

TEST_CASE("descent identity F(x) = sum w_p Q_p(u)") {
    Rng rng(7);
    for (FieldPtr K : {Q2(), C3()}) {
        for (int t = 0; t < 40; t++) {
            GQF F = rand_gqf(K, 2, rng);
            DescendedSystem S = descend(F);
            auto x = rand_integral_vec(K, 2, rng);
            auto u = transport_to_z(x);
            FieldElement rhs = K->zero();
            for (int p = 0; p < K->degree(); p++)
                rhs = rhs + K->basis_element(p).scaled(S.eval_form(p, u));
            CHECK(F.evaluate(x) == rhs);
        }
    }
}

TEST_CASE("round trips: lift(descend(F)) = F and descend(lift(S)) = S") {
    Rng rng(8);
    for (FieldPtr K : {Q2(), C3()}) {
        for (int t = 0; t < 25; t++) {
            GQF F = rand_gqf(K, 2, rng);
            CHECK(lift(descend(F)) == F);
        }
        for (int t = 0; t < 25; t++) {
            DescendedSystem S = rand_system(K, 2, rng);
            GQF F = lift(S);
            CHECK(descend(F) == S);
        }
    }
}

TEST_CASE("lift reproduces the special diagonal tensor") {
    auto K = Q2();
    int tau = tau_of(K);
    GQF F = make_diagonal({K->from_rat(2), K->from_rat(-1), K->from_rat(3)},
                          {K->one(), K->from_rat(4)}, tau);
    CHECK(lift(descend(F)) == F);
}

TEST_CASE("descent linearity") {
    auto K = Q2();
    Rng rng(9);
    for (int t = 0; t < 15; t++) {
        GQF F1 = rand_gqf(K, 2, rng), F2 = rand_gqf(K, 2, rng);
        DescendedSystem S1 = descend(F1), S2 = descend(F2), S12 = descend(F1 + F2);
        for (int p = 0; p < K->degree(); p++) {
            for (int i = 0; i < S1.forms[size_t(p)].rows(); i++)
                for (int j = 0; j < S1.forms[size_t(p)].cols(); j++)
                    CHECK(S12.forms[size_t(p)].at(i, j) ==
                          S1.forms[size_t(p)].at(i, j) + S2.forms[size_t(p)].at(i, j));
        }
    }
}

TEST_CASE("shift coordinates") {
    auto K = Q2();
    GQF F = make_diagonal({K->one(), K->one()}, {K->one()}, tau_of(K));
    DescendedSystem S = descend(F);
    auto S3 = shift_system(S, K->from_rat(3));
    CHECK(S3.shift == std::vector<Int>{3, 0});
    auto S32 = shift_system(S, K->parse_element("3+1*w2"));
    CHECK(S32.shift == std::vector<Int>{3, 1});
    auto S0 = shift_system(S, K->zero());
    CHECK(S0.shift == std::vector<Int>{0, 0});
    CHECK_THROWS_AS(shift_system(S, K->element({Rat(1, 2), Rat(0)})), invalid_input);
}

TEST_CASE("W matrix determinant") {
    auto K = Q2();
    const int n = 2;
    auto W = w_matrix(K, n);
    // |det W| = D_K^(n/2) = 8
    const int N = int(W.size());
    double det = 1;
    auto M = W;
    for (int c = 0; c < N; c++) {
        int piv = c;
        for (int i = c + 1; i < N; i++)
            if (std::abs(M[size_t(i)][size_t(c)]) > std::abs(M[size_t(piv)][size_t(c)])) piv = i;
        if (piv != c) {
            std::swap(M[size_t(c)], M[size_t(piv)]);
            det = -det;
        }
        det *= M[size_t(c)][size_t(c)];
        for (int i = c + 1; i < N; i++) {
            double f = M[size_t(i)][size_t(c)] / M[size_t(c)][size_t(c)];
            for (int j = c; j < N; j++) M[size_t(i)][size_t(j)] -= f * M[size_t(c)][size_t(j)];
        }
    }
    CHECK(std::abs(std::abs(det) - 8.0) < 1e-9);
}

TEST_CASE("solution transport equivalence on a small box") {
    auto K = Q2();
    GQF F = make_diagonal({K->one(), K->one()}, {K->one()}, tau_of(K));
    FieldElement N = K->from_rat(3);
    DescendedSystem S = shift_system(descend(F), N);

    // x = (1,1) -> u = (1,1,0,0) satisfies Q1 = 3, Q2 = 0
    auto u0 = transport_to_z({K->one(), K->one()});
    CHECK(S.eval_form(0, u0) == 3);
    CHECK(S.eval_form(1, u0) == 0);

    int count_f = 0, count_q = 0;
    for (long a1 = -2; a1 <= 2; a1++)
        for (long b1 = -2; b1 <= 2; b1++)
            for (long a2 = -2; a2 <= 2; a2++)
                for (long b2 = -2; b2 <= 2; b2++) {
                    std::vector<FieldElement> x{K->element({Rat(a1), Rat(b1)}),
                                                K->element({Rat(a2), Rat(b2)})};
                    bool fsol = (F.evaluate(x) == N);
                    auto u = transport_to_z(x);
                    bool qsol = true;
                    for (int p = 0; p < 2; p++)
                        if (S.eval_form(p, u) != Rat(S.shift[size_t(p)])) qsol = false;
                    CHECK(fsol == qsol);
                    count_f += fsol;
                    count_q += qsol;
                }
    CHECK(count_f == count_q);
    CHECK(count_f >= 4);  // (±1, ±1) at least
    // u = 0 <-> x = 0
    auto z = transport_to_o(K, 2, std::vector<Int>(4, Int(0)));
    CHECK(z[0].is_zero());
    CHECK(z[1].is_zero());
}

TEST_CASE("integerize clears denominators") {
    auto K = Q2();
    Rng rng(10);
    DescendedSystem S = rand_system(K, 2, rng);
    IntegerSystem I = integerize(S);
    for (size_t p = 0; p < I.forms.size(); p++)
        for (int i = 0; i < I.forms[p].rows(); i++)
            for (int j = 0; j < I.forms[p].cols(); j++)
                CHECK(Rat(I.forms[p].at(i, j)) == S.forms[p].at(i, j) * Rat(I.scale));
}
