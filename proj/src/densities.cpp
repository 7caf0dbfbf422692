#include "gqf/densities.hpp"

#include <algorithm>
#include <cmath>

#include "gqf/kernels.hpp"
#include "gqf/parallel.hpp"
#include "gqf/rng.hpp"

namespace gqf {

namespace {

long mod_pow_long(long base, long e, long m) {
    long r = 1 % m;
    base %= m;
    if (base < 0) base += m;
    while (e > 0) {
        if (e & 1) r = long((__int128)r * base % m);
        base = long((__int128)base * base % m);
        e >>= 1;
    }
    return r;
}

long inv_mod_long(long a, long m) {
    long r;
    Int ai(a), mi(m), out;
    if (mpz_invert(out.get_mpz_t(), ai.get_mpz_t(), mi.get_mpz_t()) == 0)
        throw error("modular inverse does not exist");
    r = out.get_si();
    return r;
}

// Histogram convolution with exact overflow tracking: throws budget when a
// bin could exceed int64.
std::vector<int64_t> conv_chain(const std::vector<std::vector<int64_t>>& hs,
                                const std::vector<long>& dims, long conv_budget) {
    long total = 1;
    for (long d : dims) total *= d;
    std::vector<int64_t> C = hs[0];
    Int maxbin = 0, mass_c = 0;
    for (int64_t v : C) {
        maxbin = std::max(maxbin, Int(v));
        mass_c += v;
    }
    double cost = 0;
    for (size_t i = 1; i < hs.size(); i++) {
        cost += double(total) * double(total);
        if (cost > double(conv_budget))
            throw budget_exceeded("histogram convolution exceeds the budget");
        Int mass_h = 0, max_h = 0;
        for (int64_t v : hs[i]) {
            mass_h += v;
            max_h = std::max(max_h, Int(v));
        }
        // bound on the next max bin: min(mass_c * max_h, mass_h * maxbin)
        Int bound = std::min(mass_c * max_h, mass_h * maxbin);
        if (bound > Int(1) << 62)
            throw budget_exceeded("histogram convolution would overflow int64");
        std::vector<int64_t> next(size_t(total), 0);
        kernels::cyclic_convolve_i64(C.data(), hs[i].data(), next.data(), dims.data(),
                                     int(dims.size()));
        C = std::move(next);
        mass_c *= mass_h;
        maxbin = 0;
        for (int64_t v : C) maxbin = std::max(maxbin, Int(v));
    }
    return C;
}

struct SeparableData {
    DiagonalShape shape;
    int n = 0, m = 0, d = 0;
};

std::optional<SeparableData> separable(const GQF& F) {
    auto diag = as_diagonal(F);
    if (!diag) return std::nullopt;
    SeparableData out;
    out.shape = *diag;
    out.n = F.vars();
    out.m = int(diag->b.size());
    out.d = F.field()->degree();
    return out;
}

// ---- path B: separable convolution over the group (Z/M)^d ----

Int count_separable_group(const GQF& F, const SeparableData& sd, const FieldElement& N,
                          long M, const DensityBudget& budget) {
    const FieldPtr& K = F.field();
    const int d = sd.d, n = sd.n;
    double group = std::pow(double(M), double(d));
    if (group * group * (n - 1) > double(budget.conv_budget))
        throw budget_exceeded("separable group convolution over budget");
    long G = 1;
    for (int i = 0; i < d; i++) G *= M;

    std::vector<long> dims(size_t(d), M);
    // struct consts and tau matrix as long mod M
    const int tau = sd.shape.tau;
    std::vector<std::vector<int64_t>> hs;
    std::vector<long> x(size_t(d), 0), sq(size_t(d), 0), acc(size_t(d), 0), xt(size_t(d), 0),
        tmp(size_t(d), 0);
    auto ring_mul_mod = [&](const long* a, const long* b, long* out) {
        for (int k = 0; k < d; k++) out[k] = 0;
        for (int i = 0; i < d; i++) {
            if (a[i] == 0) continue;
            for (int j = 0; j < d; j++) {
                if (b[j] == 0) continue;
                long f = long((__int128)a[i] * b[j] % M);
                for (int k = 0; k < d; k++) {
                    const Int& s = K->struct_const(i, j, k);
                    if (s != 0) {
                        long sv = fmod(s, Int(M)).get_si();
                        out[k] = long((out[k] + (__int128)f * sv) % M);
                    }
                }
            }
        }
    };
    auto apply_tau_mod = [&](const long* v, long* out) {
        const QMat& Mt = K->galois()[size_t(tau)];
        for (int i = 0; i < d; i++) {
            __int128 s = 0;
            for (int j = 0; j < d; j++) {
                long e = fmod(Mt.at(i, j).get_num(), Int(M)).get_si();
                s += (__int128)e * v[j];
            }
            out[i] = long(((s % M) + M) % M);
        }
    };
    auto coeff_mod = [&](const FieldElement& c) {
        std::vector<long> v(size_t(d), 0);
        for (int k = 0; k < d; k++) v[size_t(k)] = fmod(c.coord(k).get_num(), Int(M)).get_si();
        return v;
    };

    for (int i = 0; i < n; i++) {
        std::vector<int64_t> h(size_t(G), 0);
        std::vector<long> ai = coeff_mod(sd.shape.a[size_t(i)]);
        bool has_b = size_t(i) < sd.shape.b.size();
        std::vector<long> bi = has_b ? coeff_mod(sd.shape.b[size_t(i)]) : std::vector<long>();
        // enumerate x over (Z/M)^d
        std::fill(x.begin(), x.end(), 0L);
        while (true) {
            ring_mul_mod(x.data(), x.data(), sq.data());
            ring_mul_mod(ai.data(), sq.data(), acc.data());
            if (has_b) {
                apply_tau_mod(x.data(), xt.data());
                ring_mul_mod(xt.data(), xt.data(), sq.data());
                ring_mul_mod(bi.data(), sq.data(), tmp.data());
                for (int k = 0; k < d; k++) acc[size_t(k)] = (acc[size_t(k)] + tmp[size_t(k)]) % M;
            }
            long idx = 0;
            for (int k = d - 1; k >= 0; k--) idx = idx * M + acc[size_t(k)];
            h[size_t(idx)]++;
            int pos = 0;
            while (pos < d) {
                x[size_t(pos)]++;
                if (x[size_t(pos)] < M) break;
                x[size_t(pos)] = 0;
                pos++;
            }
            if (pos == d) break;
        }
        hs.push_back(std::move(h));
    }
    std::vector<int64_t> C = conv_chain(hs, dims, budget.conv_budget);
    long idx = 0;
    for (int k = d - 1; k >= 0; k--) {
        long nk = fmod(N.coord(k).get_num(), Int(M)).get_si();
        idx = idx * M + nk;
    }
    return Int(C[size_t(idx)]);
}

// ---- path A: totally split scalar CRT for d = 2, m <= 1 ----

struct SplitData {
    long r1 = 0, r2 = 0;  // lifted roots of min_poly mod M
};

std::optional<SplitData> split_roots(const FieldPtr& K, long p, int l) {
    if (K->degree() != 2) return std::nullopt;
    const auto& f = K->min_poly();
    // roots mod p
    std::vector<long> roots;
    for (long r = 0; r < p; r++) {
        __int128 v = 0;
        for (int i = int(f.size()) - 1; i >= 0; i--)
            v = (v * r + fmod(f[size_t(i)], Int(p)).get_si()) % p;
        if (v == 0) roots.push_back(r);
    }
    if (roots.size() != 2) return std::nullopt;  // not split
    long M = 1;
    for (int i = 0; i < l; i++) M *= p;
    auto lift = [&](long r0) {
        long mod = p, r = r0;
        while (mod < M) {
            mod = std::min(M, mod * mod);
            // Newton: r -= f(r)/f'(r) mod `mod`
            __int128 fv = 0, dv = 0;
            for (int i = int(f.size()) - 1; i >= 0; i--) {
                long c = fmod(f[size_t(i)], Int(mod)).get_si();
                fv = (fv * r + c) % mod;
            }
            for (int i = int(f.size()) - 1; i >= 1; i--) {
                long c = fmod(Int(i) * f[size_t(i)], Int(mod)).get_si();
                dv = (dv * r + c) % mod;
            }
            long fl = long(fv), dl = long(dv);
            long di = inv_mod_long(((dl % mod) + mod) % mod, mod);
            r = long(((r - (__int128)fl * di) % mod + mod) % mod);
        }
        return r % M;
    };
    SplitData out;
    out.r1 = lift(roots[0]);
    out.r2 = lift(roots[1]);
    return out;
}

Int count_separable_split(const GQF& F, const SeparableData& sd, const FieldElement& N, long p,
                          int l, const SplitData& roots, const DensityBudget& budget) {
    const FieldPtr& K = F.field();
    const int n = sd.n, m = sd.m;
    long M = 1;
    for (int i = 0; i < l; i++) M *= p;
    if (double(M) * M > double(budget.conv_budget))
        throw budget_exceeded("split path over budget");

    // component value of an element at a lifted root: coords over the
    // integral basis evaluated through basis_in_powers at theta = r.
    auto component = [&](const FieldElement& c, long r) {
        __int128 acc = 0;
        for (int j = 0; j < K->degree(); j++) {
            // omega_j(r) = sum_i basis[j][i] r^i, denominators inverted mod M
            const QMat& B = K->basis_in_powers();
            __int128 w = 0, rp = 1;
            for (int i = 0; i < K->degree(); i++) {
                const Rat& e = B.at(j, i);
                long num = fmod(e.get_num(), Int(M)).get_si();
                long den = fmod(e.get_den(), Int(M)).get_si();
                long ev = long((__int128)num * inv_mod_long(den, M) % M);
                w = (w + (__int128)ev * rp) % M;
                rp = rp * r % M;
            }
            long cj = fmod(c.coord(j).get_num(), Int(M)).get_si();
            acc = (acc + (__int128)cj * long(w)) % M;
        }
        return long(acc);
    };

    // component coefficients
    std::vector<long> a1, a2, b1, b2;
    for (int i = 0; i < n; i++) {
        a1.push_back(component(sd.shape.a[size_t(i)], roots.r1));
        a2.push_back(component(sd.shape.a[size_t(i)], roots.r2));
    }
    for (int i = 0; i < m; i++) {
        b1.push_back(component(sd.shape.b[size_t(i)], roots.r1));
        b2.push_back(component(sd.shape.b[size_t(i)], roots.r2));
    }
    long N1 = component(N, roots.r1), N2 = component(N, roots.r2);

    // r_c(t): counts over the exclusive variables of component c
    std::vector<long> dims{M};
    auto square_hist = [&](long coef) {
        std::vector<int64_t> h(size_t(M), 0);
        for (long y = 0; y < M; y++) {
            long v = long((__int128)coef * y % M * y % M);
            h[size_t(v)]++;
        }
        return h;
    };
    auto build_r = [&](const std::vector<long>& coefs) {
        std::vector<std::vector<int64_t>> hs;
        for (size_t i = size_t(m); i < coefs.size(); i++) hs.push_back(square_hist(coefs[i]));
        if (hs.empty()) {
            std::vector<int64_t> unit(size_t(M), 0);
            unit[0] = 1;
            return unit;
        }
        return conv_chain(hs, dims, budget.conv_budget);
    };
    std::vector<int64_t> rc1 = build_r(a1), rc2 = build_r(a2);

    // shared variables: (y_{i,1}, y_{i,2}) for i < m contribute
    //   a1_i y1^2 + b1_i y2^2 to eq 1 and a2_i y2^2 + b2_i y1^2 to eq 2.
    Int total = 0;
    if (m == 0) {
        total = Int(rc1[size_t(N1)]) * Int(rc2[size_t(N2)]);
    } else if (m == 1) {
        for (long y1 = 0; y1 < M; y1++) {
            long q1 = long((__int128)a1[0] * y1 % M * y1 % M);
            long q2b = long((__int128)b2[0] * y1 % M * y1 % M);
            for (long y2 = 0; y2 < M; y2++) {
                long t1 = long((q1 + (__int128)b1[0] * y2 % M * y2) % M);
                long t2 = long((q2b + (__int128)a2[0] * y2 % M * y2) % M);
                long u1 = ((N1 - t1) % M + M) % M;
                long u2 = ((N2 - t2) % M + M) % M;
                total += Int(rc1[size_t(u1)]) * Int(rc2[size_t(u2)]);
            }
        }
    } else {
        throw budget_exceeded("split path supports at most one conjugated variable");
    }
    return total;
}

// ---- path C: generic enumeration of the shifted descended system ----

// Integer polynomial coefficients of the descended forms: q_f(u) =
// sum_i diag[f][i] u_i^2 + sum_{i<j} cross[f][i][j] u_i u_j. These are
// always integral for an integral F (values on Z^D are traces against the
// dual basis), unlike the symmetric matrix entries.
struct PolyForms {
    int D = 0, nf = 0;
    std::vector<std::vector<Int>> diag;   // nf x D
    std::vector<std::vector<Int>> cross;  // nf x D*D (upper triangle used)
    std::vector<Int> shift;               // N coordinates (or zeros)
};

PolyForms poly_forms(const GQF& F, const FieldElement& N) {
    DescendedSystem S = shift_system(descend(F), N);
    PolyForms out;
    out.D = S.dim();
    out.nf = int(S.forms.size());
    out.diag.assign(size_t(out.nf), std::vector<Int>(size_t(out.D)));
    out.cross.assign(size_t(out.nf), std::vector<Int>(size_t(out.D) * size_t(out.D)));
    for (int f = 0; f < out.nf; f++) {
        const QMat& M = S.forms[size_t(f)];
        for (int i = 0; i < out.D; i++) {
            if (!is_integer(M.at(i, i)))
                throw error("descended diagonal coefficient is not integral");
            out.diag[size_t(f)][size_t(i)] = M.at(i, i).get_num();
            for (int j = i + 1; j < out.D; j++) {
                Rat c = M.at(i, j) * 2;
                if (!is_integer(c)) throw error("descended cross coefficient is not integral");
                out.cross[size_t(f)][size_t(i) * size_t(out.D) + size_t(j)] = c.get_num();
            }
        }
    }
    out.shift = S.shift;
    if (out.shift.empty()) out.shift.assign(size_t(out.nf), Int(0));
    return out;
}

Int count_generic_enum(const GQF& F, const FieldElement& N, long M,
                       const DensityBudget& budget) {
    PolyForms P = poly_forms(F, N);
    const int D = P.D, nf = P.nf;
    double tuples = std::pow(double(M), double(D));
    if (tuples > double(budget.enum_budget))
        throw budget_exceeded("generic enumeration over budget: lower l or raise the budget");

    std::vector<std::vector<long>> diag(size_t(nf), std::vector<long>(size_t(D), 0));
    std::vector<std::vector<long>> cross(size_t(nf), std::vector<long>(size_t(D) * size_t(D), 0));
    std::vector<long> target(size_t(nf), 0);
    for (int f = 0; f < nf; f++) {
        for (int i = 0; i < D; i++) {
            diag[size_t(f)][size_t(i)] = fmod(P.diag[size_t(f)][size_t(i)], Int(M)).get_si();
            for (int j = i + 1; j < D; j++)
                cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)] =
                    fmod(P.cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)], Int(M)).get_si();
        }
        target[size_t(f)] = fmod(P.shift[size_t(f)], Int(M)).get_si();
    }

    // odometer over the outer D-1 coordinates; the innermost coordinate t
    // walks with constant second differences mod M.
    std::vector<long> u(size_t(D), 0);
    Int count = 0;
    std::vector<long> val0(size_t(nf), 0), d1(size_t(nf), 0), d2(size_t(nf), 0);
    auto recompute = [&]() {
        for (int f = 0; f < nf; f++) {
            __int128 v = 0;
            for (int i = 1; i < D; i++) {
                if (u[size_t(i)] == 0) continue;
                v += (__int128)diag[size_t(f)][size_t(i)] * u[size_t(i)] % M * u[size_t(i)];
                for (int j = i + 1; j < D; j++)
                    if (u[size_t(j)] != 0)
                        v += (__int128)cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)] *
                             u[size_t(i)] % M * u[size_t(j)];
            }
            val0[size_t(f)] = long(((v % M) + M) % M);
            __int128 lin = 0;
            for (int j = 1; j < D; j++)
                if (u[size_t(j)] != 0)
                    lin += (__int128)cross[size_t(f)][size_t(0) * size_t(D) + size_t(j)] *
                           u[size_t(j)];
            long a00 = diag[size_t(f)][0];
            // q(t) = val0 + lin t + a00 t^2 ; d1(0) = lin + a00, d2 = 2 a00
            d1[size_t(f)] = long(((((lin % M) + a00) % M) + M) % M);
            d2[size_t(f)] = (2 * a00) % M;
        }
    };

    while (true) {
        recompute();
        std::vector<long> v = val0, dd = d1;
        for (long t = 0; t < M; t++) {
            bool all = true;
            for (int f = 0; f < nf; f++)
                if (v[size_t(f)] != target[size_t(f)]) { all = false; break; }
            if (all) count += 1;
            for (int f = 0; f < nf; f++) {
                v[size_t(f)] = (v[size_t(f)] + dd[size_t(f)]) % M;
                dd[size_t(f)] = (dd[size_t(f)] + d2[size_t(f)]) % M;
            }
        }
        int pos = 1;
        while (pos < D) {
            u[size_t(pos)]++;
            if (u[size_t(pos)] < M) break;
            u[size_t(pos)] = 0;
            pos++;
        }
        if (pos == D) break;
    }
    return count;
}

}  // namespace

LocalDensity local_density(const GQF& F, const FieldElement& N, const Int& p, int l,
                           const DensityBudget& budget) {
    if (l < 1) throw invalid_input("local_density: l must be at least 1");
    if (!F.is_integral() || !N.is_integral())
        throw invalid_input("local_density: form and target must be integral");
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();
    if (!p.fits_slong_p()) throw budget_exceeded("prime too large");
    long pl = p.get_si();
    long M = 1;
    for (int i = 0; i < l; i++) {
        if (M > (1L << 40) / pl) throw budget_exceeded("modulus p^l too large");
        M *= pl;
    }

    LocalDensity out;
    out.p = p;
    out.l = l;

    auto sd = separable(F);
    bool counted = false;
    const int fp = budget.force_path;
    if ((fp == 0 || fp == 1) && sd && d == 2 && sd->m <= 1 && pl % 2 == 1) {
        auto roots = split_roots(K, pl, l);
        if (roots) {
            try {
                out.count = count_separable_split(F, *sd, N, pl, l, *roots, budget);
                counted = true;
            } catch (const budget_exceeded&) {
                if (fp == 1) throw;
            }
        }
    }
    if (fp == 1 && !counted) throw budget_exceeded("split path not applicable");
    if (!counted && (fp == 0 || fp == 2) && sd) {
        try {
            out.count = count_separable_group(F, *sd, N, M, budget);
            counted = true;
        } catch (const budget_exceeded&) {
            if (fp == 2) throw;
        }
    }
    if (fp == 2 && !counted) throw budget_exceeded("group path not applicable");
    if (!counted) out.count = count_generic_enum(F, N, M, budget);  // may throw budget

    Rat denom(1);
    for (int i = 0; i < d * l * (n - 1); i++) denom *= Rat(p);
    out.value = Rat(out.count) / denom;
    return out;
}

namespace {

// Exact emptiness of the singular locus on the fiber mod p for separable
// d = 2 systems: enumerate the pencil P^1(F_p); outside the finitely many
// ratios killing some per-variable 2x2 block, the only candidate is x = 0.
bool hensel_certificate(const GQF& F, const FieldElement& N, long p) {
    const FieldPtr& K = F.field();
    if (K->degree() != 2 || p == 2) return false;
    auto sd = separable(F);
    if (!sd) return false;
    const int n = sd->n;

    PolyForms P = poly_forms(F, N);
    // per-variable polynomial data mod p: q_f restricted to variable i is
    //   a_f u^2 + c_f u v + b_f v^2  (u = U_{0,i}, v = U_{1,i})
    auto pa = [&](int f, int i) { return fmod(P.diag[size_t(f)][size_t(i)], Int(p)).get_si(); };
    auto pb = [&](int f, int i) {
        return fmod(P.diag[size_t(f)][size_t(n + i)], Int(p)).get_si();
    };
    auto pc = [&](int f, int i) {
        return fmod(P.cross[size_t(f)][size_t(i) * size_t(P.D) + size_t(n + i)], Int(p)).get_si();
    };
    long N1 = fmod(P.shift[0], Int(p)).get_si();
    long N2 = fmod(P.shift[1], Int(p)).get_si();

    // x = 0 is singular; it lies on the fiber iff N = 0 mod p.
    if (N1 == 0 && N2 == 0) return false;

    // gradient blocks: grad of q_f at (u, v) is (2a u + c v, c u + 2b v).
    auto m00 = [&](int i, long lam, long mu) {
        return ((lam * 2 * pa(0, i) + mu * 2 * pa(1, i)) % p + p) % p;
    };
    auto m01 = [&](int i, long lam, long mu) {
        return ((lam * pc(0, i) + mu * pc(1, i)) % p + p) % p;
    };
    auto m11 = [&](int i, long lam, long mu) {
        return ((lam * 2 * pb(0, i) + mu * 2 * pb(1, i)) % p + p) % p;
    };
    auto detM = [&](int i, long lam, long mu) {
        long a = m00(i, lam, mu), c = m01(i, lam, mu), b = m11(i, lam, mu);
        return ((a * b - c * c) % p + p) % p;
    };

    // ratios with a degenerate block: roots of det(lam A_i + mu B_i), a
    // binary quadratic per variable; collect them exactly by scanning P^1.
    // Cost O(n p); the expensive fiber check runs only at those ratios.
    std::vector<std::pair<long, long>> ratios;  // (lam, mu)
    for (long mu = 0; mu < p; mu++) ratios.push_back({1, mu});
    ratios.push_back({0, 1});

    for (auto [lam, mu] : ratios) {
        std::vector<int> degen;
        for (int i = 0; i < n; i++)
            if (detM(i, lam, mu) == 0) degen.push_back(i);
        if (degen.empty()) continue;  // kernel = {0}, fiber excludes 0
        if (int(degen.size()) == n && n > 3) {
            // fully degenerate pencil direction: bail out (uncertified)
            return false;
        }
        // candidate singular points: product of per-variable kernels;
        // non-degenerate variables are pinned to 0. Count fiber hits by a
        // sparse convolution of per-variable value lists over (Z/p)^2.
        std::vector<std::vector<std::pair<long, long>>> values;
        for (int i : degen) {
            long a00 = m00(i, lam, mu), a01 = m01(i, lam, mu), a11 = m11(i, lam, mu);
            std::vector<std::pair<long, long>> vals;  // (q1, q2) at kernel points
            for (long u = 0; u < p; u++)
                for (long v = 0; v < p; v++) {
                    if (((a00 * u + a01 * v) % p) != 0) continue;
                    if (((a01 * u + a11 * v) % p) != 0) continue;
                    long q1 = ((pa(0, i) * u % p * u + pc(0, i) * u % p * v +
                                pb(0, i) * v % p * v) %
                                   p +
                               p) %
                              p;
                    long q2 = ((pa(1, i) * u % p * u + pc(1, i) * u % p * v +
                                pb(1, i) * v % p * v) %
                                   p +
                               p) %
                              p;
                    vals.push_back({q1, q2});
                }
            values.push_back(std::move(vals));
        }
        // sparse convolution over (Z/p)^2 of the value multisets
        std::vector<long> hist(size_t(p) * size_t(p), 0);
        hist[0] = 1;
        for (const auto& vals : values) {
            std::vector<long> next(size_t(p) * size_t(p), 0);
            for (long idx = 0; idx < long(hist.size()); idx++) {
                if (hist[size_t(idx)] == 0) continue;
                long t1 = idx / p, t2 = idx % p;
                for (auto [q1, q2] : vals) {
                    long s1 = (t1 + q1) % p, s2 = (t2 + q2) % p;
                    next[size_t(s1 * p + s2)] += hist[size_t(idx)];
                }
            }
            hist = std::move(next);
        }
        if (hist[size_t(N1 % p * p + N2 % p)] > 0) return false;  // singular fiber point
    }
    return true;
}

// search for a nonsingular solution mod p (probabilistic, seeded)
bool find_nonsingular_solution(const GQF& F, const FieldElement& N, long p, long tries,
                               uint64_t seed) {
    PolyForms P = poly_forms(F, N);
    const int D = P.D, nf = P.nf;
    std::vector<std::vector<long>> diag(size_t(nf), std::vector<long>(size_t(D), 0));
    std::vector<std::vector<long>> cross(size_t(nf), std::vector<long>(size_t(D) * size_t(D), 0));
    std::vector<long> target(size_t(nf), 0);
    for (int f = 0; f < nf; f++) {
        for (int i = 0; i < D; i++) {
            diag[size_t(f)][size_t(i)] = fmod(P.diag[size_t(f)][size_t(i)], Int(p)).get_si();
            for (int j = i + 1; j < D; j++)
                cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)] =
                    fmod(P.cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)], Int(p)).get_si();
        }
        target[size_t(f)] = fmod(P.shift[size_t(f)], Int(p)).get_si();
    }
    Rng rng(seed);
    std::vector<long> x(size_t(D), 0);
    for (long t = 0; t < tries; t++) {
        for (auto& v : x) v = long(rng.next_below(uint64_t(p)));
        bool sol = true;
        for (int f = 0; f < nf && sol; f++) {
            __int128 acc = 0;
            for (int i = 0; i < D; i++) {
                if (x[size_t(i)] == 0) continue;
                acc += (__int128)diag[size_t(f)][size_t(i)] * x[size_t(i)] % p * x[size_t(i)];
                for (int j = i + 1; j < D; j++)
                    if (x[size_t(j)] != 0)
                        acc += (__int128)cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)] *
                               x[size_t(i)] % p * x[size_t(j)];
            }
            if (long(((acc % p) + p) % p) != target[size_t(f)]) sol = false;
        }
        if (!sol) continue;
        // Jacobian mod p: d q_f / d u_i = 2 diag u_i + sum_j cross_ij u_j
        std::vector<std::vector<long>> J(size_t(nf), std::vector<long>(size_t(D), 0));
        for (int f = 0; f < nf; f++)
            for (int i = 0; i < D; i++) {
                __int128 acc = (__int128)2 * diag[size_t(f)][size_t(i)] * x[size_t(i)];
                for (int j = 0; j < D; j++) {
                    if (j == i) continue;
                    long c = (j > i) ? cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)]
                                     : cross[size_t(f)][size_t(j) * size_t(D) + size_t(i)];
                    acc += (__int128)c * x[size_t(j)];
                }
                J[size_t(f)][size_t(i)] = long(((acc % p) + p) % p);
            }
        // rank by elimination mod p
        int rank = 0;
        for (int col = 0; col < D && rank < nf; col++) {
            int piv = -1;
            for (int r = rank; r < nf; r++)
                if (J[size_t(r)][size_t(col)] != 0) { piv = r; break; }
            if (piv < 0) continue;
            std::swap(J[size_t(rank)], J[size_t(piv)]);
            long inv = inv_mod_long(J[size_t(rank)][size_t(col)], p);
            for (int r = 0; r < nf; r++) {
                if (r == rank || J[size_t(r)][size_t(col)] == 0) continue;
                long f2 = J[size_t(r)][size_t(col)] * inv % p;
                for (int c2 = col; c2 < D; c2++)
                    J[size_t(r)][size_t(c2)] =
                        ((J[size_t(r)][size_t(c2)] - f2 * J[size_t(rank)][size_t(c2)]) % p + p) % p;
            }
            rank++;
        }
        if (rank == nf) return true;
    }
    return false;
}

}  // namespace

SingularSeries singular_series(const GQF& F, const FieldElement& N, long p_max, int l_max,
                               const DensityBudget& budget) {
    SingularSeries out;
    double product = 1, product_half = 1;
    bool all_positive = true;
    for (long p = 2; p <= p_max; p++) {
        bool isp = true;
        for (long q = 2; q * q <= p; q++)
            if (p % q == 0) { isp = false; break; }
        if (!isp) continue;

        PrimeDensity pd;
        pd.p = Int(p);
        Rat prev(-1);
        bool have_value = false;
        bool observed = false;
        for (int l = 1; l <= l_max; l++) {
            LocalDensity ld;
            try {
                ld = local_density(F, N, Int(p), l, budget);
            } catch (const budget_exceeded&) {
                pd.budget_hit = true;
                break;
            }
            if (have_value && ld.value == prev) {
                observed = true;
                pd.l_used = l - 1;
                pd.sigma = prev;
                break;
            }
            prev = ld.value;
            pd.sigma = ld.value;
            pd.l_used = l;
            have_value = true;
        }
        if (!have_value) {
            // nothing computable for this prime within budget: record only
            pd.l_used = 0;
            out.primes.push_back(pd);
            continue;
        }
        pd.nonsingular_found =
            find_nonsingular_solution(F, N, p, budget.solution_probe_tries, 0x5eedULL + p);
        // spec's stabilization rule needs the observed equality AND a
        // nonsingular point; the Hensel certificate is a separate exact flag
        pd.stabilized = observed && pd.nonsingular_found;
        if (!pd.stabilized) pd.hensel_certified = hensel_certificate(F, N, p);

        out.primes.push_back(pd);
        double s = to_double(pd.sigma);
        product *= s;
        if (p <= p_max / 2) product_half *= s;
        if (pd.sigma == 0) {
            out.obstructed = true;
            all_positive = false;
        }
    }
    out.value = product;
    out.positive = all_positive && product > 0;
    out.tail_sensitivity =
        (product == 0) ? 0 : std::abs(product - product_half) / std::abs(product);
    return out;
}

RealPoint find_real_point(const DescendedSystem& S, const std::vector<double>& targets,
                          int max_starts, uint64_t seed) {
    const int D = S.dim(), nf = int(S.forms.size());
    std::vector<std::vector<double>> mats(size_t(nf), std::vector<double>(size_t(D) * size_t(D), 0.0));
    for (int f = 0; f < nf; f++)
        for (int i = 0; i < D; i++)
            for (int j = 0; j < D; j++)
                mats[size_t(f)][size_t(i) * size_t(D) + size_t(j)] =
                    to_double(S.forms[size_t(f)].at(i, j));

    Rng rng(seed);
    RealPoint best;
    for (int start = 0; start < max_starts; start++) {
        std::vector<double> x(size_t(D), 0.0);
        for (auto& v : x) v = rng.next_in(-1.0, 1.0);
        bool ok = false;
        for (int it = 0; it < 200; it++) {
            // residuals and Jacobian
            std::vector<double> r(size_t(nf), 0.0);
            std::vector<std::vector<double>> J(size_t(nf), std::vector<double>(size_t(D), 0.0));
            for (int f = 0; f < nf; f++) {
                double q = 0;
                for (int i = 0; i < D; i++) {
                    double gi = 0;
                    for (int j = 0; j < D; j++)
                        gi += mats[size_t(f)][size_t(i) * size_t(D) + size_t(j)] * x[size_t(j)];
                    J[size_t(f)][size_t(i)] = 2 * gi;
                    q += x[size_t(i)] * gi;
                }
                r[size_t(f)] = q - targets[size_t(f)];
            }
            double rn = 0;
            for (double v : r) rn = std::max(rn, std::abs(v));
            if (rn < 1e-12) { ok = true; break; }
            // Gauss-Newton step: solve (J J^T) y = r, x -= J^T y
            std::vector<std::vector<double>> G(size_t(nf), std::vector<double>(size_t(nf) + 1, 0.0));
            for (int a = 0; a < nf; a++) {
                for (int b = 0; b < nf; b++) {
                    double s = 0;
                    for (int i = 0; i < D; i++) s += J[size_t(a)][size_t(i)] * J[size_t(b)][size_t(i)];
                    G[size_t(a)][size_t(b)] = s;
                }
                G[size_t(a)][size_t(nf)] = r[size_t(a)];
            }
            bool singular = false;
            for (int c = 0; c < nf; c++) {
                int piv = c;
                for (int i = c + 1; i < nf; i++)
                    if (std::abs(G[size_t(i)][size_t(c)]) > std::abs(G[size_t(piv)][size_t(c)])) piv = i;
                if (std::abs(G[size_t(piv)][size_t(c)]) < 1e-14) { singular = true; break; }
                std::swap(G[size_t(c)], G[size_t(piv)]);
                for (int i = 0; i < nf; i++) {
                    if (i == c) continue;
                    double f2 = G[size_t(i)][size_t(c)] / G[size_t(c)][size_t(c)];
                    for (int j = c; j <= nf; j++) G[size_t(i)][size_t(j)] -= f2 * G[size_t(c)][size_t(j)];
                }
            }
            if (singular) break;
            for (int i = 0; i < D; i++) {
                double step = 0;
                for (int f = 0; f < nf; f++)
                    step += J[size_t(f)][size_t(i)] * G[size_t(f)][size_t(nf)] / G[size_t(f)][size_t(f)];
                x[size_t(i)] -= step;
            }
        }
        if (!ok) continue;
        // smallest singular value via eigenvalues of J J^T (Jacobi sweeps)
        std::vector<std::vector<double>> J(size_t(nf), std::vector<double>(size_t(D), 0.0));
        double res = 0;
        for (int f = 0; f < nf; f++) {
            double q = 0;
            for (int i = 0; i < D; i++) {
                double gi = 0;
                for (int j = 0; j < D; j++)
                    gi += mats[size_t(f)][size_t(i) * size_t(D) + size_t(j)] * x[size_t(j)];
                J[size_t(f)][size_t(i)] = 2 * gi;
                q += x[size_t(i)] * gi;
            }
            res = std::max(res, std::abs(q - targets[size_t(f)]));
        }
        std::vector<std::vector<double>> G(size_t(nf), std::vector<double>(size_t(nf), 0.0));
        double tr = 0;
        for (int a = 0; a < nf; a++) {
            for (int b = 0; b < nf; b++) {
                double s = 0;
                for (int i = 0; i < D; i++) s += J[size_t(a)][size_t(i)] * J[size_t(b)][size_t(i)];
                G[size_t(a)][size_t(b)] = s;
            }
            tr += G[size_t(a)][size_t(a)];
        }
        // lambda_min(G) by bisection on Cholesky feasibility of G - t I
        auto posdef = [&](double t) {
            std::vector<std::vector<double>> L = G;
            for (int a = 0; a < nf; a++) L[size_t(a)][size_t(a)] -= t;
            for (int c = 0; c < nf; c++) {
                double piv = L[size_t(c)][size_t(c)];
                if (piv <= 0) return false;
                for (int i = c + 1; i < nf; i++) {
                    double f2 = L[size_t(i)][size_t(c)] / piv;
                    for (int j = c; j < nf; j++) L[size_t(i)][size_t(j)] -= f2 * L[size_t(c)][size_t(j)];
                }
            }
            return true;
        };
        double lo = 0, hi = std::max(tr, 1e-30);
        if (!posdef(0)) hi = 0;
        for (int it = 0; it < 80 && hi > 0; it++) {
            double mid = (lo + hi) / 2;
            if (posdef(mid)) lo = mid;
            else hi = mid;
        }
        double sv = std::sqrt(std::max(0.0, lo));
        if (res < 1e-10 && sv > 1e-6) {
            best.found = true;
            best.xi = x;
            best.residual = res;
            best.min_jacobian_sv = sv;
            best.starts_used = start + 1;
            return best;
        }
    }
    best.found = false;
    best.starts_used = max_starts;
    return best;
}

SlabEstimate singular_integral(const DescendedSystem& S, const std::vector<double>& targets,
                               const std::vector<double>& xi, double delta, double eps,
                               long samples, uint64_t seed, SlabWeight weight) {
    const int D = S.dim(), nf = int(S.forms.size());
    std::vector<double> mats(size_t(nf) * size_t(D) * size_t(D));
    for (int f = 0; f < nf; f++)
        for (int i = 0; i < D; i++)
            for (int j = 0; j < D; j++)
                mats[size_t(f) * size_t(D) * size_t(D) + size_t(i) * size_t(D) + size_t(j)] =
                    to_double(S.forms[size_t(f)].at(i, j));

    SlabEstimate out;
    out.seed = seed;
    out.eps = eps;
    out.samples = samples;
    out.box_lo.assign(size_t(D), 0);
    out.box_hi.assign(size_t(D), 0);
    for (int j = 0; j < D; j++) {
        out.box_lo[size_t(j)] = xi[size_t(j)] - delta;
        out.box_hi[size_t(j)] = xi[size_t(j)] + delta;
    }
    // exact support restriction from positive-definite diagonal constraints
    for (int f = 0; f < nf; f++) {
        bool diag_pos = true;
        for (int i = 0; i < D && diag_pos; i++)
            for (int j = 0; j < D; j++) {
                double v = mats[size_t(f) * size_t(D) * size_t(D) + size_t(i) * size_t(D) + size_t(j)];
                if (i == j && v <= 0) diag_pos = false;
                if (i != j && v != 0) diag_pos = false;
            }
        if (!diag_pos) continue;
        double cap = targets[size_t(f)] + eps;
        if (cap < 0) {
            // empty slab
            for (int j = 0; j < D; j++) {
                out.box_lo[size_t(j)] = 0;
                out.box_hi[size_t(j)] = 0;
            }
            out.value = 0;
            return out;
        }
        for (int j = 0; j < D; j++) {
            double qjj = mats[size_t(f) * size_t(D) * size_t(D) + size_t(j) * size_t(D) + size_t(j)];
            double bound = std::sqrt(cap / qjj);
            out.box_lo[size_t(j)] = std::max(out.box_lo[size_t(j)], -bound);
            out.box_hi[size_t(j)] = std::min(out.box_hi[size_t(j)], bound);
        }
    }
    double vol = 1;
    for (int j = 0; j < D; j++) {
        double w = out.box_hi[size_t(j)] - out.box_lo[size_t(j)];
        if (w <= 0) {
            out.value = 0;
            return out;
        }
        vol *= w;
    }

    struct Acc {
        double sum = 0, sumsq = 0, sum_h = 0, sumsq_h = 0;
        long hits = 0;
    };
    const long batch = 8192;
    const long shards = 256;
    Acc total = sharded_reduce<Acc>(
        samples, shards,
        [&](long shard, long b, long e, Acc& acc) {
            Rng rng(seed, uint64_t(shard));
            std::vector<double> xs(size_t(D) * size_t(batch));
            std::vector<double> vals(size_t(nf) * size_t(batch));
            long todo = e - b;
            while (todo > 0) {
                long B = std::min(batch, todo);
                // sample-major draw order (coordinates of one point adjacent
                // in the stream)
                for (long s = 0; s < B; s++)
                    for (int j = 0; j < D; j++)
                        xs[size_t(j) * size_t(batch) + size_t(s)] =
                            rng.next_in(out.box_lo[size_t(j)], out.box_hi[size_t(j)]);
                kernels::eval_quadrics_f64(mats.data(), nf, D, xs.data(), batch, vals.data());
                for (long s = 0; s < B; s++) {
                    double dev = 0;
                    for (int f = 0; f < nf; f++)
                        dev = std::max(dev,
                                       std::abs(vals[size_t(f) * size_t(batch) + size_t(s)] -
                                                targets[size_t(f)]));
                    if (dev > eps) {
                        // still contributes 0 to both estimators
                        continue;
                    }
                    double w = 1.0;
                    if (weight == SlabWeight::smooth) {
                        double r2 = 0;
                        for (int j = 0; j < D; j++) {
                            double dx = (xs[size_t(j) * size_t(batch) + size_t(s)] -
                                         xi[size_t(j)]) / delta;
                            r2 = std::max(r2, std::abs(dx));
                        }
                        w = (r2 < 1.0) ? std::exp(-1.0 / (1.0 - r2 * r2)) : 0.0;
                    }
                    acc.sum += w;
                    acc.sumsq += w * w;
                    acc.hits++;
                    if (dev <= eps / 2) {
                        acc.sum_h += w;
                        acc.sumsq_h += w * w;
                    }
                }
                todo -= B;
            }
        },
        [](Acc& into, const Acc& from) {
            into.sum += from.sum;
            into.sumsq += from.sumsq;
            into.sum_h += from.sum_h;
            into.sumsq_h += from.sumsq_h;
            into.hits += from.hits;
        },
        Acc{});

    double ns = double(samples);
    double mean = total.sum / ns;
    double var = std::max(0.0, total.sumsq / ns - mean * mean);
    double scale = vol / std::pow(2 * eps, nf);
    out.value = scale * mean;
    out.stderr_ = scale * std::sqrt(var / ns);
    double mean_h = total.sum_h / ns;
    double var_h = std::max(0.0, total.sumsq_h / ns - mean_h * mean_h);
    double scale_h = vol / std::pow(eps, nf);  // 2*(eps/2)
    out.value_half = scale_h * mean_h;
    out.stderr_half = scale_h * std::sqrt(var_h / ns);
    out.hits = total.hits;
    if (total.hits == 0 && samples > 0)
        throw budget_exceeded(
            "slab estimator saw no hits; increase eps, delta, or the sample count");
    return out;
}

MainTerm main_term(const GQF& F, const FieldElement& N, double P, double delta, long p_max,
                   int l_max, long mc_samples, double eps, uint64_t seed, SlabWeight weight,
                   const DensityBudget& budget) {
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();
    MainTerm out;
    out.P = P;
    out.delta = delta;

    out.series = singular_series(F, N, p_max, l_max, budget);

    DescendedSystem S = shift_system(descend(F), N);
    std::vector<double> targets;
    for (int i = 0; i < d; i++) targets.push_back(to_double(Rat(S.shift[size_t(i)])) / (P * P));

    out.point = find_real_point(S, targets, 64, seed);
    if (!out.point.found) {
        out.constant = 0;
        out.predicted = 0;
       return out;
    }
    out.integral = singular_integral(S, targets, out.point.xi, delta, eps, mc_samples, seed,
                                     weight);

    double dk = K->discriminant().get_d();
    double denom = std::pow(dk, double(n) - 0.5);
    out.constant = out.integral.value * out.series.value / denom;
    out.stderr_ = out.integral.stderr_ * std::abs(out.series.value) / denom;
    out.predicted = out.constant * std::pow(P, double((n - 2) * d));
    return out;
}

}  // namespace gqf
