#include "gqf/expsums.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gqf/rng.hpp"

namespace gqf {

namespace {

// int64 residue arithmetic for an integral ideal of moderate norm; the hot
// loops of the character sums run entirely in here. Construction verifies
// overflow bounds for the operations used (products of two reduced
// elements scaled by a small multiplier).
struct FastModRing {
    const FieldPtr K;
    int d;
    std::vector<long> hnf;    // d x d row-major, upper triangular
    std::vector<long> diag;
    std::vector<long> sc;     // struct consts
    long size = 1;

    explicit FastModRing(const Ideal& b, const Int& max_scalar = 64)
        : K(b.field()), d(b.field()->degree()) {
        if (!b.is_integral()) throw invalid_input("FastModRing: modulus not integral");
        hnf.resize(size_t(d) * d);
        diag.resize(size_t(d));
        Int maxdiag = 1;
        for (int i = 0; i < d; i++) {
            for (int j = 0; j < d; j++) {
                if (!b.mat().at(i, j).fits_slong_p())
                    throw budget_exceeded("modulus too large for the fast residue path");
                hnf[size_t(i) * d + size_t(j)] = b.mat().at(i, j).get_si();
            }
            diag[size_t(i)] = hnf[size_t(i) * d + size_t(i)];
            size *= diag[size_t(i)];
            maxdiag = std::max(maxdiag, Int(diag[size_t(i)]));
        }
        sc.resize(size_t(d) * d * d);
        Int maxsc = 1;
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++)
                for (int k = 0; k < d; k++) {
                    const Int& s = K->struct_const(i, j, k);
                    if (!s.fits_slong_p())
                        throw budget_exceeded("structure constants exceed the fast path");
                    sc[(size_t(i) * d + size_t(j)) * d + size_t(k)] = s.get_si();
                    maxsc = std::max(maxsc, Int(abs(s)));
                }
        // worst-case coordinate in mul(): d^2 * maxdiag^2 * maxsc * max_scalar
        Int worst = Int(d) * d * maxdiag * maxdiag * maxsc * max_scalar;
        if (!worst.fits_slong_p() || worst.get_si() > (1L << 61))
            throw budget_exceeded("fast residue path would overflow int64");
    }

    void reduce(long* v) const {
        for (int j = d - 1; j >= 0; j--) {
            long dj = hnf[size_t(j) * d + size_t(j)];
            long q = v[j] / dj;
            if ((v[j] % dj) < 0) q--;  // floor division
            if (q != 0)
                for (int i = 0; i <= j; i++) v[i] -= q * hnf[size_t(i) * d + size_t(j)];
        }
    }

    long index(const long* v) const {
        long idx = 0, w = 1;
        for (int i = 0; i < d; i++) {
            idx += v[i] * w;
            w *= diag[size_t(i)];
        }
        return idx;
    }

    void rep(long idx, long* v) const {
        for (int i = 0; i < d; i++) {
            v[i] = idx % diag[size_t(i)];
            idx /= diag[size_t(i)];
        }
    }

    // out = a*b in the ring, reduced
    void mul(const long* a, const long* b, long* out) const {
        for (int k = 0; k < d; k++) out[k] = 0;
        for (int i = 0; i < d; i++) {
            if (a[i] == 0) continue;
            for (int j = 0; j < d; j++) {
                if (b[j] == 0) continue;
                long f = a[i] * b[j];
                const long* s = &sc[(size_t(i) * d + size_t(j)) * d];
                for (int k = 0; k < d; k++) out[k] += f * s[k];
            }
        }
        reduce(out);
    }

    // out = c*a for a small integral element c (coords long)
    void scalar_mul(const long* c, const long* a, long* out) const { mul(c, a, out); }
};

std::vector<long> elem_coords_long(const FieldElement& x) {
    std::vector<long> v;
    for (const Rat& c : x.coords()) {
        if (!is_integer(c) || !c.get_num().fits_slong_p())
            throw budget_exceeded("element coordinates exceed the fast path");
        v.push_back(c.get_num().get_si());
    }
    return v;
}

// Exact phase accumulator for psi(m . x): Tr(m x) = sum_k row_k x_k with
// precomputed rational row; returns numerator against a fixed denominator.
struct LinearPhase {
    std::vector<Int> num;  // per coordinate
    Int den = 1;

    LinearPhase(const FieldElement& m, const FieldPtr& K) {
        const int d = K->degree();
        std::vector<Rat> row(static_cast<size_t>(d));
        for (int k = 0; k < d; k++) {
            Rat acc = 0;
            for (int j = 0; j < d; j++) acc += m.coord(j) * K->trace_gram().at(j, k);
            row[size_t(k)] = acc;
        }
        for (const Rat& r : row) {
            Int l;
            mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), r.get_den().get_mpz_t());
            den = l;
        }
        for (const Rat& r : row) {
            Rat v = r * Rat(den);
            num.push_back(v.get_num());
        }
    }

    // phase numerator mod den for integer coordinates v
    long eval_mod(const long* v, int d) const {
        Int acc = 0;
        for (int k = 0; k < d; k++)
            if (v[k] != 0) acc += num[size_t(k)] * v[k];
        Int r = fmod(acc, den);
        return r.get_si();  // den fits long via caller guard
    }
};

Cplx expi_frac(long num, long den) {
    double angle = 2.0 * M_PI * (double(num) / double(den));
    return {std::cos(angle), std::sin(angle)};
}

}  // namespace

Ideal g_ideal(const GQF& F, const Ideal& b) { return g_invariant_ideal(b, F.g_set()); }

HLattice h_lattice(const GQF& F, const Ideal& b) {
    if (!F.is_integral()) throw invalid_input("h_lattice: form must be integral");
    if (!b.is_integral() || b.norm() == 0) throw invalid_input("h_lattice: bad modulus");
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();
    const int dn = d * n;

    // rows: probe (k, j) x coordinate p; cols: u-part (mm, jj) then lattice
    // coefficients (d per probe) absorbing membership in b.
    const int probes = dn;
    ZMat M(probes * d, dn + probes * d);
    for (int k = 0; k < d; k++)
        for (int j = 0; j < n; j++) {
            int probe = k * n + j;
            std::vector<FieldElement> a(size_t(n), K->zero());
            a[size_t(j)] = K->basis_element(k);
            for (int mm = 0; mm < d; mm++)
                for (int jj = 0; jj < n; jj++) {
                    std::vector<FieldElement> h(size_t(n), K->zero());
                    h[size_t(jj)] = K->basis_element(mm);
                    FieldElement val = F.bilinear(a, h).scaled(2);
                    for (int p = 0; p < d; p++) {
                        Rat c = val.coord(p);
                        M.at(probe * d + p, mm * n + jj) = c.get_num();  // integral form
                    }
                }
            for (int p = 0; p < d; p++)
                for (int q = 0; q < d; q++)
                    M.at(probe * d + p, dn + probe * d + q) = -b.mat().at(p, q);
        }

    ZMat Kn = kernel_cols(M);
    ZMat cols(dn, Kn.cols());
    for (int j = 0; j < Kn.cols(); j++)
        for (int i = 0; i < dn; i++) cols.at(i, j) = Kn.at(i, j);
    ZMat H = hnf_cols(cols);
    if (H.cols() != dn) throw error("H-lattice does not have full rank");

    HLattice out;
    out.field = K;
    out.n = n;
    out.basis = H;
    out.index_top = det_upper(H);

    // |H / (^Gb)^n| as the determinant of ^Gb-basis expressed in H-basis.
    Ideal gb = g_ideal(F, b);
    Int det_inner = 1;
    {
        // columns of the (^Gb)^n lattice: per variable block, the Gb basis
        std::vector<std::vector<Int>> inner_cols;
        for (int i = 0; i < n; i++)
            for (int c = 0; c < d; c++) {
                std::vector<Int> col(static_cast<size_t>(dn), Int(0));
                for (int r = 0; r < d; r++) col[size_t(r) * n + size_t(i)] = gb.mat().at(r, c);
                inner_cols.push_back(std::move(col));
            }
        ZMat X(dn, dn);
        for (int j = 0; j < dn; j++) {
            auto sol = solve_hnf(H, inner_cols[size_t(j)]);
            if (!sol) throw error("(^Gb)^n is not contained in the H-lattice");
            for (int i = 0; i < dn; i++) X.at(i, j) = (*sol)[size_t(i)];
        }
        det_inner = abs(det_bareiss(X));
    }
    out.index_bottom = det_inner;
    return out;
}

namespace {

// Both evaluators reduce the x-sum to per-bucket aggregates over o/b:
// diagonal forms get one table per variable with
//   Z_i[q] = sum over x mod ^Gb with t_i(x) = q of psi(m_i x),
// generic forms get a single table bucketed by F(x).
struct SSumContext {
    FieldPtr K;
    Ideal b, gb;
    std::unique_ptr<FastModRing> fb, fgb;
    long nb = 0, ngb = 0;
    bool diagonal = false;
    std::vector<std::vector<Cplx>> Z;   // diagonal: per variable, size nb
    std::vector<Cplx> generic_buckets;  // generic: size nb
};

// galois matrices as long (integral)
std::vector<long> galois_long(const FieldPtr& K, int t) {
    const int d = K->degree();
    std::vector<long> g(size_t(d) * d);
    const QMat& M = K->galois()[size_t(t)];
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) g[size_t(i) * d + size_t(j)] = M.at(i, j).get_num().get_si();
    return g;
}

void apply_long_matrix(const std::vector<long>& M, int d, const long* v, long* out) {
    for (int i = 0; i < d; i++) {
        long acc = 0;
        for (int j = 0; j < d; j++) acc += M[size_t(i) * d + size_t(j)] * v[j];
        out[i] = acc;
    }
}

SSumContext build_context(const GQF& F, const Ideal& b, const std::vector<FieldElement>& m,
                          long budget) {
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();
    if (!F.is_integral()) throw invalid_input("exponential sums need an integral form");
    if (!b.is_integral() || b.is_whole_ring())
        throw invalid_input("exponential sums need a proper integral modulus");
    if (int(m.size()) != n) throw invalid_input("m has wrong length");

    SSumContext ctx;
    ctx.K = K;
    ctx.b = b;
    ctx.gb = g_ideal(F, b);

    Ideal dual = ctx.gb.trace_dual();
    for (const FieldElement& mi : m)
        if (!mi.is_zero() && !dual.contains(mi))
            throw invalid_input("m is not in the dual of the G-invariant ideal");

    ctx.fb = std::make_unique<FastModRing>(b);
    ctx.fgb = std::make_unique<FastModRing>(ctx.gb);
    ctx.nb = ctx.fb->size;
    ctx.ngb = ctx.fgb->size;

    auto diag = as_diagonal(F);
    std::vector<LinearPhase> phases;
    for (const FieldElement& mi : m) phases.emplace_back(mi, K);
    for (const auto& ph : phases)
        if (!ph.den.fits_slong_p())
            throw budget_exceeded("phase denominators exceed the fast path");

    if (diag) {
        if (double(ctx.ngb) * n > double(budget))
            throw budget_exceeded("x-sum larger than the configured budget");
        ctx.diagonal = true;
        int tau = diag->tau;
        std::vector<long> gal = tau >= 0 ? galois_long(K, tau) : std::vector<long>();
        std::vector<std::vector<long>> acoef, bcoef;
        for (const auto& e : diag->a) acoef.push_back(elem_coords_long(e));
        for (const auto& e : diag->b) bcoef.push_back(elem_coords_long(e));

        ctx.Z.assign(size_t(n), std::vector<Cplx>(size_t(ctx.nb), Cplx(0, 0)));
        std::vector<long> x(size_t(d), 0), xt(size_t(d), 0), sq(size_t(d), 0), tmp(size_t(d), 0),
            acc(size_t(d), 0);
        for (int i = 0; i < n; i++) {
            auto& Zi = ctx.Z[size_t(i)];
            const bool has_b = size_t(i) < bcoef.size();
            const long pden = phases[size_t(i)].den.get_si();
            for (long idx = 0; idx < ctx.ngb; idx++) {
                ctx.fgb->rep(idx, x.data());
                // t_i(x) = a_i x^2 (+ b_i (x^tau)^2), reduced mod b
                ctx.fb->mul(x.data(), x.data(), sq.data());
                ctx.fb->scalar_mul(acoef[size_t(i)].data(), sq.data(), acc.data());
                if (has_b) {
                    apply_long_matrix(gal, d, x.data(), xt.data());
                    ctx.fb->reduce(xt.data());
                    ctx.fb->mul(xt.data(), xt.data(), sq.data());
                    ctx.fb->scalar_mul(bcoef[size_t(i)].data(), sq.data(), tmp.data());
                    for (int k = 0; k < d; k++) acc[size_t(k)] += tmp[size_t(k)];
                    ctx.fb->reduce(acc.data());
                }
                long pnum = phases[size_t(i)].eval_mod(x.data(), d);
                Zi[size_t(ctx.fb->index(acc.data()))] += expi_frac(pnum, pden);
            }
        }
    } else {
        // generic path: enumerate tuples
        double tuples = 1;
        for (int i = 0; i < n; i++) tuples *= double(ctx.ngb);
        if (tuples > double(budget))
            throw budget_exceeded("generic x-sum larger than the configured budget");
        ctx.generic_buckets.assign(size_t(ctx.nb), Cplx(0, 0));
        std::vector<long> odo(size_t(n), 0);
        std::vector<FieldElement> xs(size_t(n), K->zero());
        for (int i = 0; i < n; i++) xs[size_t(i)] = K->zero();
        // per-variable phases precomputed
        std::vector<std::vector<Cplx>> ph(static_cast<size_t>(n));
        std::vector<std::vector<FieldElement>> reps(static_cast<size_t>(n));
        for (int i = 0; i < n; i++) {
            ph[size_t(i)].resize(size_t(ctx.ngb));
            reps[size_t(i)].resize(size_t(ctx.ngb), K->zero());
            std::vector<long> x(size_t(d), 0);
            for (long idx = 0; idx < ctx.ngb; idx++) {
                ctx.fgb->rep(idx, x.data());
                std::vector<Rat> c(static_cast<size_t>(d));
                for (int k = 0; k < d; k++) c[size_t(k)] = Rat(x[size_t(k)]);
                reps[size_t(i)][size_t(idx)] = K->element(c);
                long pnum = phases[size_t(i)].eval_mod(x.data(), d);
                ph[size_t(i)][size_t(idx)] = expi_frac(pnum, phases[size_t(i)].den.get_si());
            }
        }
        ResidueRing Rb(b);
        while (true) {
            for (int i = 0; i < n; i++) xs[size_t(i)] = reps[size_t(i)][size_t(odo[size_t(i)])];
            FieldElement val = F.evaluate(xs);
            long q = Rb.index_of(val);
            Cplx w(1, 0);
            for (int i = 0; i < n; i++) w *= ph[size_t(i)][size_t(odo[size_t(i)])];
            ctx.generic_buckets[size_t(q)] += w;
            int pos = 0;
            while (pos < n) {
                odo[size_t(pos)]++;
                if (odo[size_t(pos)] < ctx.ngb) break;
                odo[size_t(pos)] = 0;
                pos++;
            }
            if (pos == n) break;
        }
    }
    return ctx;
}

}  // namespace

SSumResult s_sum_gamma(const GQF& F, const Ideal& b, const FieldElement& N,
                       const std::vector<FieldElement>& m, long budget) {
    SSumContext ctx = build_context(F, b, m, budget);
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();

    PrimitiveCharacter chi = find_primitive_gamma(b);
    ResidueRing Rb(b);

    // psi(gamma r) for every residue r mod b
    std::vector<Cplx> Psi(size_t(ctx.nb));
    for (long r = 0; r < ctx.nb; r++) Psi[size_t(r)] = psi(chi.gamma * Rb.rep_element(r));

    // -N mod b
    std::vector<long> negN(static_cast<size_t>(d), 0);
    {
        auto nc = elem_coords_long(N);
        for (int k = 0; k < d; k++) negN[size_t(k)] = -nc[size_t(k)];
        ctx.fb->reduce(negN.data());
    }

    KahanSum total;
    std::vector<long> a(size_t(d), 0), aq(size_t(d), 0), q(size_t(d), 0), t(size_t(d), 0);
    std::vector<long> mul_table(size_t(ctx.nb));
    for (long aidx : Rb.units()) {
        ctx.fb->rep(aidx, a.data());
        // permutation q -> a*q and the N-phase
        for (long r = 0; r < ctx.nb; r++) {
            ctx.fb->rep(r, q.data());
            ctx.fb->mul(a.data(), q.data(), aq.data());
            mul_table[size_t(r)] = ctx.fb->index(aq.data());
        }
        ctx.fb->mul(a.data(), negN.data(), t.data());
        Cplx term = Psi[size_t(ctx.fb->index(t.data()))];

        if (ctx.diagonal) {
            for (int i = 0; i < n; i++) {
                const auto& Zi = ctx.Z[size_t(i)];
                KahanSum ti;
                for (long q = 0; q < ctx.nb; q++) {
                    if (Zi[size_t(q)] == Cplx(0, 0)) continue;
                    ti.add(Psi[size_t(mul_table[size_t(q)])] * Zi[size_t(q)]);
                }
                term *= ti.value();
            }
        } else {
            KahanSum inner;
            for (long r = 0; r < ctx.nb; r++) {
                const Cplx& c = ctx.generic_buckets[size_t(r)];
                if (c == Cplx(0, 0)) continue;
                inner.add(Psi[size_t(mul_table[size_t(r)])] * c);
            }
            term *= inner.value();
        }
        total.add(term);
    }

    SSumResult out;
    out.value = total.value();
    out.units = Int(long(Rb.units().size()));
    out.norm_b = b.norm();
    out.norm_gb = ctx.gb.norm();
    HLattice H = h_lattice(F, b);
    double ngb_pow = std::pow(out.norm_gb.get_d(), double(n) / 2.0);
    out.bound = out.units.get_d() * std::sqrt(H.index_bottom.get_d()) * ngb_pow;
    return out;
}

namespace {

// Sum over diagonal variable tables of the value distribution mod b:
// C[r] = sum over x-tuples with sum_i t_i(x_i) = r of prod_i psi(m_i x_i),
// computed by iterated group convolution over o/b.
std::vector<Cplx> value_distribution(const SSumContext& ctx, int n) {
    std::vector<Cplx> C;
    if (ctx.diagonal) {
        const int d = ctx.K->degree();
        std::vector<long> ar(size_t(d), 0), br(size_t(d), 0), sr(size_t(d), 0);
        C = ctx.Z[0];
        for (int i = 1; i < n; i++) {
            std::vector<Cplx> next(size_t(ctx.nb), Cplx(0, 0));
            for (long r1 = 0; r1 < ctx.nb; r1++) {
                if (C[size_t(r1)] == Cplx(0, 0)) continue;
                ctx.fb->rep(r1, ar.data());
                for (long r2 = 0; r2 < ctx.nb; r2++) {
                    const Cplx& z = ctx.Z[size_t(i)][size_t(r2)];
                    if (z == Cplx(0, 0)) continue;
                    ctx.fb->rep(r2, br.data());
                    for (int k = 0; k < d; k++) sr[size_t(k)] = ar[size_t(k)] + br[size_t(k)];
                    ctx.fb->reduce(sr.data());
                    next[size_t(ctx.fb->index(sr.data()))] += C[size_t(r1)] * z;
                }
            }
            C = std::move(next);
        }
    } else {
        C = ctx.generic_buckets;
    }
    return C;
}

}  // namespace

Cplx s_sum_moebius(const GQF& F, const Ideal& b, const FieldElement& N,
                   const std::vector<FieldElement>& m, long budget) {
    SSumContext ctx = build_context(F, b, m, budget);
    const FieldPtr& K = F.field();
    const int n = F.vars();

    std::vector<Cplx> C = value_distribution(ctx, n);
    ResidueRing Rb(b);

    // S = sum over c | b with mu(b/c) != 0 of mu(b/c) Nc sum_{r: rep(r)-N in c} C[r]
    auto fact = factor_ideal(b);  // throws unsupported_prime for bad primes
    KahanSum total;
    const size_t nprimes = fact.size();
    for (size_t mask = 0; mask < (size_t(1) << nprimes); mask++) {
        // c = b / prod_{i in mask} p_i (squarefree cofactor)
        Ideal c = b;
        int mu = 1;
        bool valid = true;
        for (size_t i = 0; i < nprimes; i++)
            if (mask & (size_t(1) << i)) {
                c = c.mul(fact[i].first.inverse());
                if (!c.is_integral()) { valid = false; break; }
                mu = -mu;
            }
        if (!valid) continue;
        KahanSum w;
        for (long r = 0; r < ctx.nb; r++) {
            if (C[size_t(r)] == Cplx(0, 0)) continue;
            FieldElement diff = Rb.rep_element(r) - N;
            if (diff.is_zero() || c.contains(diff)) w.add(C[size_t(r)]);
        }
        Cplx term = w.value();
        total.add(Cplx(double(mu) * c.norm().get_d(), 0) * term);
    }
    return total.value();
}

MultReport verify_multiplicativity(const GQF& F, const Ideal& b1, const Ideal& b2,
                                   const FieldElement& N, const std::vector<FieldElement>& m) {
    Int n1 = b1.norm(), n2 = b2.norm();
    Int g;
    mpz_gcd(g.get_mpz_t(), n1.get_mpz_t(), n2.get_mpz_t());
    if (g != 1) throw invalid_input("verify_multiplicativity: norms are not coprime");
    Ideal b = b1.mul(b2);

    MultReport rep;
    rep.lhs = s_sum_gamma(F, b, N, m).value;

    auto scaled_m = [&](const Int& c) {
        std::vector<FieldElement> out;
        for (const auto& mi : m) out.push_back(mi.scaled(Rat(c)));
        return out;
    };
    // inverse of Nb2 modulo Nb1 works modulo b1 since Nb1 lies in b1
    auto inv_mod = [](const Int& a, const Int& mod) {
        Int r;
        if (mod == 1) return Int(0);
        if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
            throw error("norm inverse does not exist");
        return r;
    };
    Int i2 = inv_mod(n2, n1), i1 = inv_mod(n1, n2);
    Cplx s1 = b1.is_whole_ring()
                  ? Cplx(1, 0)
                  : s_sum_gamma(F, b1, N.scaled(Rat(i2 * i2)), scaled_m(n2)).value;
    Cplx s2 = b2.is_whole_ring()
                  ? Cplx(1, 0)
                  : s_sum_gamma(F, b2, N.scaled(Rat(i1 * i1)), scaled_m(n1)).value;
    rep.rhs = s1 * s2;
    double scale = std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
    rep.rel_diff = std::abs(rep.lhs - rep.rhs) / scale;
    return rep;
}

namespace {

void require_degree1_odd(const Ideal& p) {
    if (!p.is_integral()) throw invalid_input("prime must be integral");
    Int np = p.norm();
    if (mpz_probab_prime_p(np.get_mpz_t(), 30) == 0)
        throw invalid_input("ideal is not a degree-1 prime (norm not prime)");
    if (np % 2 == 0) throw invalid_input("prime above 2 not allowed here");
    Int g;
    Int disc = p.field()->discriminant();
    mpz_gcd(g.get_mpz_t(), np.get_mpz_t(), disc.get_mpz_t());
    if (g != 1) throw invalid_input("ramified prime not allowed here");
}

}  // namespace

Cplx gauss_sum(const Ideal& p) {
    require_degree1_odd(p);
    PrimitiveCharacter chi = find_primitive_gamma(p);
    ResidueRing R(p);
    KahanSum s;
    for (long u = 0; u < R.size(); u++) {
        FieldElement x = R.rep_element(u);
        s.add(psi(chi.gamma * x * x));
    }
    return s.value();
}

Cplx kloosterman_salie(const Ideal& p, const FieldElement& A, const FieldElement& B,
                       int chi_exponent) {
    require_degree1_odd(p);
    PrimitiveCharacter chi = find_primitive_gamma(p);
    ResidueRing R(p);
    const Int np = p.norm();
    // quadratic character chi(a) = a^((Np-1)/2) mod p = +-1
    Int e = (np - 1) / 2;
    long one = R.index_of(p.field()->one());
    KahanSum s;
    for (long a : R.units()) {
        // chi(a)
        long r = one, base = a;
        Int ee = e;
        while (ee > 0) {
            if (mpz_odd_p(ee.get_mpz_t())) r = R.mul(r, base);
            base = R.mul(base, base);
            ee >>= 1;
        }
        int chival = (r == one) ? 1 : -1;
        double coef = (chi_exponent % 2 == 0) ? 1.0 : double(chival);
        long ainv = R.inv(a);
        FieldElement phase_arg =
            chi.gamma * (R.rep_element(a) * A + R.rep_element(ainv) * B);
        Cplx term = psi(phase_arg);
        s.add(coef * term);
    }
    return s.value();
}

SigmaDecomposition sigma_decomposition(const GQF& F, const Ideal& p, const FieldElement& N,
                                       const std::vector<FieldElement>& v) {
    const FieldPtr& K = F.field();
    auto diag = as_diagonal(F);
    if (!diag || diag->tau < 0)
        throw invalid_input("sigma_decomposition needs a diagonal special shape");
    require_degree1_odd(p);
    const int tau = diag->tau, n = F.vars(), m = int(diag->b.size());

    Ideal ptilde = p.conjugate(K->galois_inverse(tau));
    if (ptilde == p)
        throw invalid_input("sigma_decomposition: p must differ from its tau-conjugate");
    for (const auto& c : diag->a)
        if (!p.coprime_to(Ideal::principal(c)))
            throw invalid_input("sigma_decomposition: p divides a diagonal coefficient");
    for (const auto& c : diag->b)
        if (!p.coprime_to(Ideal::principal(c)))
            throw invalid_input("sigma_decomposition: p divides a diagonal coefficient");

    // lambda, mu with ord_p(mu) = ord_ptilde(lambda) = 0,
    // ord_p(lambda) = ord_ptilde(mu) = 1.
    Ideal p2 = p.mul(p), pt2 = ptilde.mul(ptilde);
    auto mu_opt = search_ideal_element(ptilde, [&](const FieldElement& x) {
        Ideal ix = Ideal::principal(x);
        return ix.coprime_to(p) && !pt2.contains(x);
    });
    auto lam_opt = search_ideal_element(p, [&](const FieldElement& x) {
        Ideal ix = Ideal::principal(x);
        return ix.coprime_to(ptilde) && !p2.contains(x);
    });
    if (!mu_opt || !lam_opt)
        throw search_exhausted("sigma_decomposition: lambda/mu search failed");
    FieldElement mu = *mu_opt, lam = *lam_opt;

    PrimitiveCharacter chi = find_primitive_gamma(p);
    ResidueRing Rp(p), Rpt(ptilde);

    // Sigma0 = prod_{i>m} sum_{w mod ptilde} psi(gamma alpha lambda w v_i)
    Cplx sigma0(1, 0);
    for (int i = m; i < n; i++) {
        KahanSum s;
        for (long w = 0; w < Rpt.size(); w++)
            s.add(psi(chi.gamma * chi.alpha * lam * Rpt.rep_element(w) * v[size_t(i)]));
        sigma0 *= s.value();
    }

    FieldElement mu2 = mu * mu;
    FieldElement lamt = lam.galois(tau);
    FieldElement lamt2 = lamt * lamt;

    // gbar: integer inverse of g modulo the rational prime under p
    Int np = p.norm();
    Int gmod = fmod(chi.g, np);
    Int gbar;
    if (mpz_invert(gbar.get_mpz_t(), gmod.get_mpz_t(), np.get_mpz_t()) == 0)
        throw error("g is not invertible mod p");
    FieldElement gbar2N = N.scaled(Rat(gbar * gbar));

    KahanSum asum;
    for (long a : Rp.units()) {
        FieldElement ae = Rp.rep_element(a);
        // Sigma1(a) = prod_i sum_{u mod p} psi(gamma {a mu^2 a_i u^2 + alpha mu v_i u})
        Cplx s1(1, 0);
        for (int i = 0; i < n; i++) {
            KahanSum s;
            FieldElement quad = ae * mu2 * diag->a[size_t(i)];
            FieldElement lin = chi.alpha * mu * v[size_t(i)];
            for (long u = 0; u < Rp.size(); u++) {
                FieldElement ue = Rp.rep_element(u);
                s.add(psi(chi.gamma * (quad * ue * ue + lin * ue)));
            }
            s1 *= s.value();
        }
        // Sigma2(a) = prod_{i<=m} sum_{w mod ptilde}
        //   psi(gamma {a (lam^tau)^2 b_i (w^tau)^2 + alpha lam v_i w})
        Cplx s2(1, 0);
        for (int i = 0; i < m; i++) {
            KahanSum s;
            FieldElement quad = ae * lamt2 * diag->b[size_t(i)];
            FieldElement lin = chi.alpha * lam * v[size_t(i)];
            for (long w = 0; w < Rpt.size(); w++) {
                FieldElement we = Rpt.rep_element(w);
                FieldElement wt = we.galois(tau);
                s.add(psi(chi.gamma * (quad * wt * wt + lin * we)));
            }
            s2 *= s.value();
        }
        asum.add(psi(-(chi.gamma * ae * gbar2N)) * s1 * s2);
    }

    SigmaDecomposition out;
    out.sigma0 = sigma0;
    out.recomposed = sigma0 * asum.value();
    out.direct = s_sum_gamma(F, p, N, v).value;
    double scale = std::max({1.0, std::abs(out.direct), std::abs(out.recomposed)});
    out.rel_diff = std::abs(out.direct - out.recomposed) / scale;

    // theta_p(v): 1 if p | N and ord_p(G(v)) >= -1, else 1/2
    bool p_divides_N = N.is_zero() || p.contains(N);
    bool ord_ok;
    GQF G = dual_form(F);
    FieldElement gv = G.evaluate(v);
    if (gv.is_zero()) ord_ok = true;
    else ord_ok = (ord_p(p, gv) >= -1);
    out.theta = (p_divides_N && ord_ok) ? 1.0 : 0.5;
    out.bound_ratio =
        std::abs(out.direct) / std::pow(np.get_d(), out.theta + double(3 * n - m) / 2.0);
    return out;
}

std::optional<std::vector<FieldElement>> violating_m(const GQF& F, const Ideal& b,
                                                     const HLattice& H, int tries,
                                                     uint64_t seed) {
    const FieldPtr& K = F.field();
    const int d = K->degree(), n = F.vars();
    Ideal gb = g_ideal(F, b);
    Ideal dual = gb.trace_dual();
    Ideal dual_o = Ideal::whole_ring(K).trace_dual();
    std::vector<FieldElement> dual_basis = dual.basis_elements();

    // h-columns as field vectors
    std::vector<std::vector<FieldElement>> hs;
    for (int j = 0; j < H.basis.cols(); j++) {
        std::vector<Int> u(static_cast<size_t>(d * n));
        for (int i = 0; i < d * n; i++) u[size_t(i)] = H.basis.at(i, j);
        hs.push_back(transport_to_o(K, n, u));
    }

    Rng rng(seed);
    for (int t = 0; t < tries; t++) {
        std::vector<FieldElement> m;
        for (int i = 0; i < n; i++) {
            FieldElement mi = K->zero();
            for (int k = 0; k < d; k++)
                mi = mi + dual_basis[size_t(k)].scaled(Rat(rng.next_int(-2, 2)));
            m.push_back(mi);
        }
        for (const auto& h : hs) {
            FieldElement dot = K->zero();
            for (int i = 0; i < n; i++) dot = dot + m[size_t(i)] * h[size_t(i)];
            if (!dot.is_zero() && !dual_o.contains(dot)) return m;
        }
    }
    return std::nullopt;
}

}  // namespace gqf
