#ifndef GQF_KERNELS_IMPL_HPP
#define GQF_KERNELS_IMPL_HPP

#include <cstdint>

namespace gqf::kernels {

struct KernelTable {
    void (*conv1d)(const int64_t* a, const int64_t* b2, int64_t* out, long M);
    void (*quadrics)(const double* mats, int nf, int N, const double* xs, long B, double* out);
    long (*roots)(const int64_t* c2, const int64_t* c1, const int64_t* c0, int nf, int64_t t0,
                  int64_t t1, int64_t* out_t);
};

// conv1d contract: out[k] += sum_j a[j] * b2[k - j + M] for k in [0, M),
// where b2 is the doubled segment of length 2M.

extern const KernelTable scalar_table;
#if defined(GQF_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif

}  // namespace gqf::kernels

#endif
