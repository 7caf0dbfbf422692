#include <cstddef>

#include "kernels_impl.hpp"

namespace gqf::kernels {

namespace {

void conv1d_scalar(const int64_t* a, const int64_t* b2, int64_t* out, long M) {
    for (long j = 0; j < M; j++) {
        int64_t aj = a[j];
        if (aj == 0) continue;
        const int64_t* bs = b2 + (M - j);
        for (long k = 0; k < M; k++) out[k] += aj * bs[k];
    }
}

void quadrics_scalar(const double* mats, int nf, int N, const double* xs, long B, double* out) {
    for (int f = 0; f < nf; f++) {
        const double* M = mats + size_t(f) * N * N;
        double* o = out + size_t(f) * B;
        for (long b = 0; b < B; b++) o[b] = 0.0;
        for (int i = 0; i < N; i++) {
            // diagonal term, then doubled upper triangle
            const double mii = M[size_t(i) * N + i];
            const double* xi = xs + size_t(i) * B;
            if (mii != 0.0)
                for (long b = 0; b < B; b++) o[b] += mii * xi[b] * xi[b];
            for (int j = i + 1; j < N; j++) {
                const double mij = 2.0 * M[size_t(i) * N + j];
                if (mij == 0.0) continue;
                const double* xj = xs + size_t(j) * B;
                for (long b = 0; b < B; b++) o[b] += mij * xi[b] * xj[b];
            }
        }
    }
}

long roots_scalar(const int64_t* c2, const int64_t* c1, const int64_t* c0, int nf, int64_t t0,
                  int64_t t1, int64_t* out_t) {
    long count = 0;
    for (int64_t t = t0; t < t1; t++) {
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

const KernelTable scalar_table{conv1d_scalar, quadrics_scalar, roots_scalar};

}  // namespace gqf::kernels
