#ifndef GQF_KERNELS_HPP
#define GQF_KERNELS_HPP

#include <cstdint>
#include <string>

namespace gqf::kernels {

// Data-parallel inner loops behind the counting machinery: scalar reference
// implementations plus AVX2 variants selected at runtime. Results are
// bit-identical between variants (integer kernels exactly; float kernels by
// identical per-sample operation order with FP contraction disabled), which
// the equivalence suite asserts.

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);    // overrides detection (tests, --kernel flag)
void reset_isa();           // back to detection + GQF_KERNEL env override
std::string isa_name(Isa isa);

// Cyclic convolution over Z/dims[0] x ... x Z/dims[nd-1] (row-major,
// innermost axis contiguous): out[s] += sum_r a[r] * b[s - r mod dims].
// Caller guarantees no int64 overflow.
void cyclic_convolve_i64(const int64_t* a, const int64_t* b, int64_t* out,
                         const long* dims, int nd);

// Values of nf dense symmetric quadratic forms (row-major N x N matrices,
// mats[f*N*N + i*N + j]) at B sample points stored coordinate-major
// (xs[j*B + b]). out[f*B + b] = x_b^T M_f x_b.
void eval_quadrics_f64(const double* mats, int nf, int N, const double* xs, long B,
                       double* out);

// Roots of nf simultaneous integer quadratics along an axis: counts
// t in [t0, t1) with c2[f] t^2 + c1[f] t + c0[f] == 0 for every f,
// appending the roots to out_t (capacity at least t1 - t0).
long roots_along_axis_i64(const int64_t* c2, const int64_t* c1, const int64_t* c0, int nf,
                          int64_t t0, int64_t t1, int64_t* out_t);

}  // namespace gqf::kernels

#endif
