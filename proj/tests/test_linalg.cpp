#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gqf/linalg.hpp"
#include "gqf/rng.hpp"

using namespace gqf;

namespace {

ZMat make(int r, int c, std::initializer_list<int> v) {
    ZMat m(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; i++)
        for (int j = 0; j < c; j++) m.at(i, j) = *it++;
    return m;
}

bool in_lattice(const ZMat& H, std::vector<Int> v) {
    return solve_hnf(H, std::move(v)).has_value();
}

}  // namespace

TEST_CASE("hnf canonical form and lattice equality") {
    // Two generating sets of the same lattice must give identical HNFs.
    ZMat A = make(2, 3, {2, 1, 7, 0, 3, 5});
    ZMat B = make(2, 4, {1, 7, 4, 9, 3, 5, 6, 8});
    // B spans a sublattice of A's span only if consistent; instead build
    // B as A times a unimodular transform.
    ZMat U = make(3, 3, {1, 2, 0, 0, 1, 3, 0, 0, 1});
    ZMat AU = A.mul(U);
    CHECK(hnf_cols(A) == hnf_cols(AU));

    ZMat H = hnf_cols(A);
    CHECK(H.rows() == 2);
    CHECK(H.cols() == 2);
    CHECK(H.at(1, 0) == 0);            // upper triangular
    CHECK(H.at(0, 0) > 0);
    CHECK(H.at(1, 1) > 0);
    CHECK(H.at(0, 1) >= 0);
    CHECK(H.at(0, 1) < H.at(0, 0));
}

TEST_CASE("hnf determinant equals lattice index") {
    ZMat M = make(3, 3, {4, 1, 0, 0, 3, 2, 2, 0, 5});
    ZMat H = hnf_cols(M);
    Int d = det_upper(H);
    CHECK(abs(det_bareiss(M)) == d);
}

TEST_CASE("solve_hnf membership") {
    ZMat M = make(2, 2, {3, 1, 0, 2});
    ZMat H = hnf_cols(M);
    CHECK(in_lattice(H, {3, 0}));
    CHECK(in_lattice(H, {1, 2}));
    CHECK(in_lattice(H, {4, 2}));
    CHECK(!in_lattice(H, {1, 0}));
    CHECK(!in_lattice(H, {0, 1}));
}

TEST_CASE("reduce_mod_hnf gives box representatives") {
    ZMat H = make(2, 2, {3, 1, 0, 2});
    Rng rng(7);
    for (int t = 0; t < 200; t++) {
        std::vector<Int> v{Int(long(rng.next_u64() % 41) - 20), Int(long(rng.next_u64() % 41) - 20)};
        auto r = reduce_mod_hnf(H, v);
        CHECK(r[0] >= 0);
        CHECK(r[0] < 3);
        CHECK(r[1] >= 0);
        CHECK(r[1] < 2);
        // v - r must lie in the lattice
        CHECK(in_lattice(H, {v[0] - r[0], v[1] - r[1]}));
    }
}

TEST_CASE("integer kernel") {
    // x + 2y + 3z = 0 ; kernel rank 2
    ZMat M = make(1, 3, {1, 2, 3});
    ZMat K = kernel_cols(M);
    CHECK(K.cols() == 2);
    for (int j = 0; j < K.cols(); j++) {
        Int s = K.at(0, j) + 2 * K.at(1, j) + 3 * K.at(2, j);
        CHECK(s == 0);
    }
    // kernel lattice is saturated: (1,1,-1) must be representable
    ZMat KH = hnf_cols(K);
    CHECK(in_lattice(KH, {1, 1, -1}));
}

TEST_CASE("rational inverse, solve, kernel, rank") {
    QMat M(3, 3);
    int vals[9] = {2, 1, 0, 1, 3, 1, 0, 1, 1};
    for (int i = 0; i < 9; i++) M.at(i / 3, i % 3) = vals[i];
    QMat Minv = inverse(M);
    QMat P = M.mul(Minv);
    CHECK(P == QMat::identity(3));

    auto x = solve(M, {Rat(1), Rat(0), Rat(0)});
    REQUIRE(x.has_value());
    auto y = M.mul_vec(*x);
    CHECK(y[0] == 1);
    CHECK(y[1] == 0);
    CHECK(y[2] == 0);

    QMat S(2, 3);
    S.at(0, 0) = 1; S.at(0, 1) = 2; S.at(0, 2) = 3;
    S.at(1, 0) = 2; S.at(1, 1) = 4; S.at(1, 2) = 6;
    CHECK(rank(S) == 1);
    QMat K = kernel(S);
    CHECK(K.cols() == 2);
}

TEST_CASE("bareiss rank and determinant agree with rational path") {
    Rng rng(99);
    for (int t = 0; t < 30; t++) {
        int n = 1 + int(rng.next_u64() % 5);
        ZMat M(n, n);
        QMat Q(n, n);
        for (int i = 0; i < n; i++)
            for (int j = 0; j < n; j++) {
                long v = long(rng.next_u64() % 11) - 5;
                M.at(i, j) = v;
                Q.at(i, j) = v;
            }
        Int d = det_bareiss(M);
        CHECK((d != 0) == (rank(Q) == n));
        CHECK(rank_bareiss(M) == rank(Q));
    }
}

TEST_CASE("QSolver matches solve") {
    Rng rng(123);
    QMat M(4, 4);
    for (int i = 0; i < 4; i++)
        for (int j = 0; j < 4; j++) M.at(i, j) = Rat(long(rng.next_u64() % 19) - 9);
    M.at(0, 0) += 100;  // keep it comfortably nonsingular
    QSolver s(M);
    REQUIRE(!s.singular());
    std::vector<Rat> b{Rat(1), Rat(2), Rat(-3), Rat(1, 2)};
    auto x1 = s.solve(b);
    auto x2 = solve(M, b);
    REQUIRE(x2.has_value());
    CHECK(x1 == *x2);
}

TEST_CASE("parse_rat") {
    CHECK(parse_rat("3/4") == Rat(3, 4));
    CHECK(parse_rat("-7") == Rat(-7));
    CHECK(parse_rat("2/4") == Rat(1, 2));
    CHECK_THROWS_AS(parse_rat("abc"), invalid_input);
}
