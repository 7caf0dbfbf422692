#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "gqf/kernels.hpp"
#include "gqf/rng.hpp"

using namespace gqf;
using namespace gqf::kernels;

namespace {

// Reference convolution, independent of the production kernels.
std::vector<int64_t> conv_reference(const std::vector<int64_t>& a, const std::vector<int64_t>& b,
                                    const std::vector<long>& dims) {
    long total = 1;
    for (long d : dims) total *= d;
    std::vector<int64_t> out(size_t(total), 0);
    std::vector<long> ra(dims.size(), 0), rb(dims.size(), 0);
    for (long i = 0; i < total; i++) {
        long rem = i;
        for (int k = int(dims.size()) - 1; k >= 0; k--) {
            ra[size_t(k)] = rem % dims[size_t(k)];
            rem /= dims[size_t(k)];
        }
        if (a[size_t(i)] == 0) continue;
        for (long j = 0; j < total; j++) {
            rem = j;
            for (int k = int(dims.size()) - 1; k >= 0; k--) {
                rb[size_t(k)] = rem % dims[size_t(k)];
                rem /= dims[size_t(k)];
            }
            long dest = 0;
            for (size_t k = 0; k < dims.size(); k++)
                dest = dest * dims[k] + (ra[k] + rb[k]) % dims[k];
            out[size_t(dest)] += a[size_t(i)] * b[size_t(j)];
        }
    }
    return out;
}

bool have_avx2() {
    force_isa(Isa::avx2);
    bool ok = active_isa() == Isa::avx2;
    reset_isa();
    return ok;
}

}  // namespace

TEST_CASE("cyclic convolution matches brute force, both ISAs") {
    Rng rng(21);
    for (auto dims : std::vector<std::vector<long>>{{6}, {5, 7}, {3, 4, 5}, {9, 9}}) {
        long total = 1;
        for (long d : dims) total *= d;
        std::vector<int64_t> a(static_cast<size_t>(total)), b(static_cast<size_t>(total));
        for (auto& v : a) v = int64_t(rng.next_below(2000)) - 1000;
        for (auto& v : b) v = int64_t(rng.next_below(2000)) - 1000;
        auto want = conv_reference(a, b, dims);

        for (Isa isa : {Isa::scalar, Isa::avx2}) {
            if (isa == Isa::avx2 && !have_avx2()) continue;
            force_isa(isa);
            std::vector<int64_t> out(size_t(total), 0);
            cyclic_convolve_i64(a.data(), b.data(), out.data(), dims.data(), int(dims.size()));
            CHECK(out == want);
            reset_isa();
        }
    }
}

TEST_CASE("quadric batch evaluation equals scalar reference bitwise") {
    if (!have_avx2()) {
        WARN("AVX2 not available; equivalence test skipped");
        return;
    }
    Rng rng(22);
    const int nf = 2, N = 10;
    const long B = 1003;  // deliberately not a multiple of 4
    std::vector<double> mats(size_t(nf) * N * N), xs(size_t(N) * B);
    for (int f = 0; f < nf; f++)
        for (int i = 0; i < N; i++)
            for (int j = i; j < N; j++) {
                double v = rng.next_in(-3, 3);
                mats[size_t(f) * N * N + size_t(i) * N + j] = v;
                mats[size_t(f) * N * N + size_t(j) * N + i] = v;
            }
    for (auto& v : xs) v = rng.next_in(-2, 2);

    std::vector<double> o1(size_t(nf) * B), o2(size_t(nf) * B);
    force_isa(Isa::scalar);
    eval_quadrics_f64(mats.data(), nf, N, xs.data(), B, o1.data());
    force_isa(Isa::avx2);
    eval_quadrics_f64(mats.data(), nf, N, xs.data(), B, o2.data());
    reset_isa();
    CHECK(o1 == o2);  // bitwise: same per-sample operation order, no FMA

    // sanity against a direct evaluation
    for (int trial = 0; trial < 20; trial++) {
        long b = long(rng.next_below(uint64_t(B)));
        int f = int(rng.next_below(nf));
        double want = 0;
        for (int i = 0; i < N; i++)
            for (int j = 0; j < N; j++)
                want += mats[size_t(f) * N * N + size_t(i) * N + j] * xs[size_t(i) * B + b] *
                        xs[size_t(j) * B + b];
        CHECK(o1[size_t(f) * B + b] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("axis root finding equals scalar reference") {
    Rng rng(23);
    for (int trial = 0; trial < 200; trial++) {
        int nf = 1 + int(rng.next_below(3));
        std::vector<int64_t> c2(static_cast<size_t>(nf)), c1(static_cast<size_t>(nf)), c0(static_cast<size_t>(nf));
        for (int f = 0; f < nf; f++) {
            c2[size_t(f)] = int64_t(rng.next_below(7)) - 3;
            c1[size_t(f)] = int64_t(rng.next_below(11)) - 5;
            c0[size_t(f)] = int64_t(rng.next_below(11)) - 5;
        }
        int64_t t0 = -int64_t(rng.next_below(20));
        int64_t t1 = int64_t(rng.next_below(20));
        std::vector<int64_t> r1(static_cast<size_t>(t1 - t0 + 1)), r2(static_cast<size_t>(t1 - t0 + 1));
        force_isa(Isa::scalar);
        long n1 = roots_along_axis_i64(c2.data(), c1.data(), c0.data(), nf, t0, t1, r1.data());
        long n2 = n1;
        if (have_avx2()) {
            force_isa(Isa::avx2);
            n2 = roots_along_axis_i64(c2.data(), c1.data(), c0.data(), nf, t0, t1, r2.data());
            r2.resize(size_t(n2));
        }
        reset_isa();
        r1.resize(size_t(n1));
        if (have_avx2()) CHECK(r1 == r2);
        // brute-force check
        long want = 0;
        for (int64_t t = t0; t < t1; t++) {
            bool all = true;
            for (int f = 0; f < nf; f++)
                if ((c2[size_t(f)] * t + c1[size_t(f)]) * t + c0[size_t(f)] != 0) all = false;
            want += all;
        }
        CHECK(n1 == want);
        CHECK(n2 == want);
    }
}

TEST_CASE("isa forcing and naming") {
    CHECK(isa_name(Isa::scalar) == "scalar");
    CHECK(isa_name(Isa::avx2) == "avx2");
    force_isa(Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    reset_isa();
}
