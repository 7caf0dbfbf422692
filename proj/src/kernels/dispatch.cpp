#include "gqf/kernels.hpp"

#include <cstdlib>
#include <vector>

#include "kernels_impl.hpp"

namespace gqf::kernels {

namespace {

Isa detect() {
#if defined(GQF_HAVE_AVX2)
    if (const char* env = std::getenv("GQF_KERNEL")) {
        std::string v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2") return Isa::avx2;
    }
    if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa g_isa = detect();

const KernelTable& table() {
#if defined(GQF_HAVE_AVX2)
    if (g_isa == Isa::avx2) return avx2_table;
#endif
    return scalar_table;
}

}  // namespace

Isa active_isa() { return g_isa; }

void force_isa(Isa isa) {
#if !defined(GQF_HAVE_AVX2)
    isa = Isa::scalar;
#endif
    g_isa = isa;
}

void reset_isa() { g_isa = detect(); }

std::string isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void cyclic_convolve_i64(const int64_t* a, const int64_t* b, int64_t* out, const long* dims,
                         int nd) {
    long total = 1;
    for (int i = 0; i < nd; i++) total *= dims[i];
    const long M = dims[nd - 1];      // innermost axis
    const long outer = total / M;     // product of outer dims

    // doubled copies of each innermost segment of b, reused across a-rows
    std::vector<int64_t> b2(size_t(total) * 2);
    for (long ob = 0; ob < outer; ob++) {
        const int64_t* src = b + ob * M;
        int64_t* dst = b2.data() + size_t(ob) * 2 * M;
        for (long k = 0; k < M; k++) {
            dst[k] = src[k];
            dst[M + k] = src[k];
        }
    }

    // outer coordinates of a and b add modulo their axes
    std::vector<long> ocoord(size_t(nd > 1 ? nd - 1 : 1), 0);
    const KernelTable& T = table();
    for (long oa = 0; oa < outer; oa++) {
        // decode outer coordinates of oa (row-major over dims[0..nd-2])
        {
            long rem = oa;
            for (int i = nd - 2; i >= 0; i--) {
                ocoord[size_t(i)] = rem % dims[i];
                rem /= dims[i];
            }
        }
        const int64_t* arow = a + oa * M;
        bool nonzero = false;
        for (long k = 0; k < M; k++)
            if (arow[k] != 0) { nonzero = true; break; }
        if (!nonzero) continue;
        for (long ob = 0; ob < outer; ob++) {
            // destination outer index: coordinate-wise sum mod axis
            long od = 0, rem = ob;
            for (int i = nd - 2; i >= 0; i--) {
                // decode ob on the fly
                long ci = rem % dims[i];
                rem /= dims[i];
                // accumulate destination with row-major weight
                // (recompute weights inline)
                long sum = (ocoord[size_t(i)] + ci) % dims[i];
                long w = 1;
                for (int k = i + 1; k <= nd - 2; k++) w *= dims[k];
                od += sum * w;
            }
            T.conv1d(arow, b2.data() + size_t(ob) * 2 * M, out + od * M, M);
        }
    }
}

void eval_quadrics_f64(const double* mats, int nf, int N, const double* xs, long B,
                       double* out) {
    table().quadrics(mats, nf, N, xs, B, out);
}

long roots_along_axis_i64(const int64_t* c2, const int64_t* c1, const int64_t* c0, int nf,
                          int64_t t0, int64_t t1, int64_t* out_t) {
    if (t1 <= t0) return 0;
    return table().roots(c2, c1, c0, nf, t0, t1, out_t);
}

}  // namespace gqf::kernels
