#include <immintrin.h>

#include "kernels_impl.hpp"

namespace gqf::kernels {

namespace {

// 64x64 -> low 64 bit lane-wise product (AVX2 has no native epi64 mullo).
inline __m256i mul64(__m256i a, __m256i b) {
    __m256i lo = _mm256_mul_epu32(a, b);
    __m256i ah = _mm256_srli_epi64(a, 32);
    __m256i bh = _mm256_srli_epi64(b, 32);
    __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(ah, b), _mm256_mul_epu32(a, bh));
    return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

void conv1d_avx2(const int64_t* a, const int64_t* b2, int64_t* out, long M) {
    for (long j = 0; j < M; j++) {
        int64_t aj = a[j];
        if (aj == 0) continue;
        const int64_t* bs = b2 + (M - j);
        __m256i va = _mm256_set1_epi64x(aj);
        long k = 0;
        for (; k + 4 <= M; k += 4) {
            __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bs + k));
            __m256i vo = _mm256_loadu_si256(reinterpret_cast<__m256i*>(out + k));
            vo = _mm256_add_epi64(vo, mul64(va, vb));
            _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + k), vo);
        }
        for (; k < M; k++) out[k] += aj * bs[k];
    }
}

void quadrics_avx2(const double* mats, int nf, int N, const double* xs, long B, double* out) {
    for (int f = 0; f < nf; f++) {
        const double* M = mats + size_t(f) * N * N;
        double* o = out + size_t(f) * B;
        for (long b = 0; b < B; b++) o[b] = 0.0;
        for (int i = 0; i < N; i++) {
            const double mii = M[size_t(i) * N + i];
            const double* xi = xs + size_t(i) * B;
            if (mii != 0.0) {
                __m256d vm = _mm256_set1_pd(mii);
                long b = 0;
                for (; b + 4 <= B; b += 4) {
                    __m256d vx = _mm256_loadu_pd(xi + b);
                    __m256d vo = _mm256_loadu_pd(o + b);
                    vo = _mm256_add_pd(vo, _mm256_mul_pd(_mm256_mul_pd(vm, vx), vx));
                    _mm256_storeu_pd(o + b, vo);
                }
                for (; b < B; b++) o[b] += mii * xi[b] * xi[b];
            }
            for (int j = i + 1; j < N; j++) {
                const double mij = 2.0 * M[size_t(i) * N + j];
                if (mij == 0.0) continue;
                const double* xj = xs + size_t(j) * B;
                __m256d vm = _mm256_set1_pd(mij);
                long b = 0;
                for (; b + 4 <= B; b += 4) {
                    __m256d vx = _mm256_loadu_pd(xi + b);
                    __m256d vy = _mm256_loadu_pd(xj + b);
                    __m256d vo = _mm256_loadu_pd(o + b);
                    vo = _mm256_add_pd(vo, _mm256_mul_pd(_mm256_mul_pd(vm, vx), vy));
                    _mm256_storeu_pd(o + b, vo);
                }
                for (; b < B; b++) o[b] += mij * xi[b] * xj[b];
            }
        }
    }
}

long roots_avx2(const int64_t* c2, const int64_t* c1, const int64_t* c0, int nf, int64_t t0,
                int64_t t1, int64_t* out_t) {
    long count = 0;
    int64_t t = t0;
    const __m256i step = _mm256_set1_epi64x(4);
    __m256i vt = _mm256_set_epi64x(t0 + 3, t0 + 2, t0 + 1, t0);
    for (; t + 4 <= t1; t += 4) {
        __m256i zero_mask = _mm256_set1_epi64x(-1);
        for (int f = 0; f < nf; f++) {
            __m256i v = mul64(_mm256_set1_epi64x(c2[f]), vt);
            v = _mm256_add_epi64(v, _mm256_set1_epi64x(c1[f]));
            v = mul64(v, vt);
            v = _mm256_add_epi64(v, _mm256_set1_epi64x(c0[f]));
            zero_mask = _mm256_and_si256(zero_mask,
                                         _mm256_cmpeq_epi64(v, _mm256_setzero_si256()));
            if (_mm256_testz_si256(zero_mask, zero_mask)) break;
        }
        if (!_mm256_testz_si256(zero_mask, zero_mask)) {
            alignas(32) int64_t lanes[4];
            _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), zero_mask);
            for (int l = 0; l < 4; l++)
                if (lanes[l]) out_t[count++] = t + l;
        }
        vt = _mm256_add_epi64(vt, step);
    }
    for (; t < t1; t++) {
        bool all = true;
        for (int f = 0; f < nf; f++) {
            if ((c2[f] * t + c1[f]) * t + c0[f] != 0) {
                all = false;
                break;
            }
        }
        if (all) out_t[count++] = t;
    }
    return count;
}

}  // namespace

const KernelTable avx2_table{conv1d_avx2, quadrics_avx2, roots_avx2};

}  // namespace gqf::kernels
