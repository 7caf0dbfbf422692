#include "gqf/ideal.hpp"

#include <algorithm>
#include <set>

#include "gqf/rng.hpp"

namespace gqf {

namespace {

// Scales the rational columns of M to an integer matrix, returning the
// common denominator.
std::pair<ZMat, Int> clear_denominators(const QMat& M) {
    Int den = 1;
    for (int i = 0; i < M.rows(); i++)
        for (int j = 0; j < M.cols(); j++) {
            Int l;
            mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), M.at(i, j).get_den().get_mpz_t());
            den = l;
        }
    ZMat Z(M.rows(), M.cols());
    for (int i = 0; i < M.rows(); i++)
        for (int j = 0; j < M.cols(); j++) {
            Rat v = M.at(i, j) * Rat(den);
            Z.at(i, j) = v.get_num();
        }
    return {Z, den};
}

Int content_with(const ZMat& M, Int g) {
    for (int i = 0; i < M.rows(); i++)
        for (int j = 0; j < M.cols(); j++) {
            Int t;
            mpz_gcd(t.get_mpz_t(), g.get_mpz_t(), M.at(i, j).get_mpz_t());
            g = t;
            if (g == 1) return g;
        }
    return g;
}

}  // namespace

Ideal Ideal::make_canonical(FieldPtr K, const ZMat& columns, Int den, bool check_module) {
    ZMat H = hnf_cols(columns);
    if (H.cols() != K->degree())
        throw invalid_input("ideal lattice does not have full rank");
    Int g = content_with(H, den);
    if (g > 1) {
        for (int i = 0; i < H.rows(); i++)
            for (int j = 0; j < H.cols(); j++) H.at(i, j) /= g;
        den /= g;
    }
    Ideal a;
    a.field_ = std::move(K);
    a.mat_ = std::move(H);
    a.den_ = std::move(den);
    if (check_module) {
        // w_k * (each column) must stay in the lattice.
        const auto& K2 = a.field_;
        for (int k = 0; k < K2->degree(); k++) {
            QMat Mk = K2->basis_element(k).mult_matrix();
            for (int j = 0; j < a.mat_.cols(); j++) {
                std::vector<Rat> col(static_cast<size_t>(K2->degree()));
                for (int i = 0; i < K2->degree(); i++) col[size_t(i)] = Rat(a.mat_.at(i, j));
                std::vector<Rat> prod = Mk.mul_vec(col);
                std::vector<Int> v(static_cast<size_t>(K2->degree()));
                for (int i = 0; i < K2->degree(); i++) {
                    if (!is_integer(prod[size_t(i)]))
                        throw validation_error("lattice is not an o-module");
                    v[size_t(i)] = prod[size_t(i)].get_num();
                }
                if (!solve_hnf(a.mat_, v))
                    throw validation_error("lattice is not an o-module");
            }
        }
    }
    return a;
}

Ideal Ideal::whole_ring(const FieldPtr& K) {
    return make_canonical(K, ZMat::identity(K->degree()), 1, false);
}

Ideal Ideal::principal(const FieldElement& g) {
    if (g.is_zero()) throw invalid_input("principal ideal of zero");
    Int t = g.denominator();
    QMat M = g.mult_matrix();
    ZMat Z(M.rows(), M.cols());
    for (int i = 0; i < M.rows(); i++)
        for (int j = 0; j < M.cols(); j++) {
            Rat v = M.at(i, j) * Rat(t);
            Z.at(i, j) = v.get_num();
        }
    return make_canonical(g.field(), Z, t, false);
}

Ideal Ideal::from_generators(const FieldPtr& K, const std::vector<FieldElement>& gens) {
    if (gens.empty()) throw invalid_input("ideal needs at least one generator");
    Int den = 1;
    for (const auto& g : gens) {
        Int l;
        Int t = g.denominator();
        mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), t.get_mpz_t());
        den = l;
    }
    const int d = K->degree();
    ZMat cols(d, d * int(gens.size()));
    int c = 0;
    for (const auto& g : gens) {
        QMat M = g.mult_matrix();
        for (int j = 0; j < d; j++, c++)
            for (int i = 0; i < d; i++) {
                Rat v = M.at(i, j) * Rat(den);
                cols.at(i, c) = v.get_num();
            }
    }
    return make_canonical(K, cols, den, false);
}

Ideal Ideal::from_lattice(const FieldPtr& K, const ZMat& columns, const Int& den) {
    if (den <= 0) throw invalid_input("ideal denominator must be positive");
    return make_canonical(K, columns, den, true);
}

bool Ideal::is_whole_ring() const {
    return den_ == 1 && mat_ == ZMat::identity(field_->degree());
}

Int Ideal::norm() const {
    if (den_ != 1) throw invalid_input("norm: ideal is not integral");
    return det_upper(mat_);
}

Rat Ideal::norm_rat() const {
    Rat dpow(1);
    for (int i = 0; i < field_->degree(); i++) dpow *= Rat(den_);
    return Rat(det_upper(mat_)) / dpow;
}

std::vector<FieldElement> Ideal::basis_elements() const {
    std::vector<FieldElement> out;
    for (int j = 0; j < mat_.cols(); j++) {
        std::vector<Rat> c(static_cast<size_t>(field_->degree()));
        for (int i = 0; i < field_->degree(); i++) c[size_t(i)] = Rat(mat_.at(i, j)) / Rat(den_);
        out.push_back(field_->element(std::move(c)));
    }
    return out;
}

Ideal Ideal::mul(const Ideal& o) const {
    if (field_.get() != o.field_.get() && !field_->same_field(*o.field_))
        throw invalid_input("ideal product across different fields");
    const int d = field_->degree();
    std::vector<FieldElement> a = basis_elements(), b = o.basis_elements();
    ZMat cols(d, d * d);
    Int den = den_ * o.den_;
    int c = 0;
    for (const auto& x : a)
        for (const auto& y : b) {
            FieldElement p = x * y;
            for (int i = 0; i < d; i++) {
                Rat v = p.coord(i) * Rat(den);
                cols.at(i, c) = v.get_num();
            }
            c++;
        }
    return make_canonical(field_, cols, den, false);
}

Ideal Ideal::gcd(const Ideal& o) const {
    Int den;
    mpz_lcm(den.get_mpz_t(), den_.get_mpz_t(), o.den_.get_mpz_t());
    Int fa = den / den_, fb = den / o.den_;
    const int d = field_->degree();
    ZMat cols(d, 2 * d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            cols.at(i, j) = mat_.at(i, j) * fa;
            cols.at(i, d + j) = o.mat_.at(i, j) * fb;
        }
    return make_canonical(field_, cols, den, false);
}

Ideal Ideal::intersect(const Ideal& o) const {
    Int den;
    mpz_lcm(den.get_mpz_t(), den_.get_mpz_t(), o.den_.get_mpz_t());
    Int fa = den / den_, fb = den / o.den_;
    const int d = field_->degree();
    ZMat stacked(d, 2 * d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            stacked.at(i, j) = mat_.at(i, j) * fa;
            stacked.at(i, d + j) = -o.mat_.at(i, j) * fb;
        }
    ZMat K = kernel_cols(stacked);
    // intersection basis: A' * (x-part of each kernel vector)
    ZMat cols(d, K.cols());
    for (int j = 0; j < K.cols(); j++)
        for (int i = 0; i < d; i++) {
            Int s = 0;
            for (int k = 0; k < d; k++) s += mat_.at(i, k) * fa * K.at(k, j);
            cols.at(i, j) = s;
        }
    return make_canonical(field_, cols, den, false);
}

Ideal Ideal::conjugate(int tau) const {
    const QMat& M = field_->galois()[size_t(tau)];
    const int d = field_->degree();
    ZMat cols(d, d);
    for (int j = 0; j < d; j++)
        for (int i = 0; i < d; i++) {
            Rat s = 0;
            for (int k = 0; k < d; k++) s += M.at(i, k) * Rat(mat_.at(k, j));
            cols.at(i, j) = s.get_num();  // Galois matrices are integral
        }
    return make_canonical(field_, cols, den_, false);
}

Ideal Ideal::colon(const Ideal& b) const {
    // {x : x*b <= a} = intersection over basis elements g of b of M_g^{-1} a.
    const int d = field_->degree();
    std::optional<Ideal> acc;
    for (const FieldElement& g : b.basis_elements()) {
        if (g.is_zero()) throw invalid_input("colon: degenerate ideal basis");
        QMat Mg_inv = gqf::inverse(g.mult_matrix());
        QMat Arat(d, d);
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++) Arat.at(i, j) = Rat(mat_.at(i, j)) / Rat(den_);
        QMat L = Mg_inv.mul(Arat);
        auto [Z, den] = clear_denominators(L);
        Ideal li = make_canonical(field_, Z, den, false);
        acc = acc ? acc->intersect(li) : li;
    }
    return *acc;
}

Ideal Ideal::trace_dual() const {
    const int d = field_->degree();
    QMat Arat(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) Arat.at(i, j) = Rat(mat_.at(i, j)) / Rat(den_);
    QMat M = gqf::inverse(Arat.transpose().mul(field_->trace_gram()));
    auto [Z, den] = clear_denominators(M);
    return make_canonical(field_, Z, den, false);
}

Ideal Ideal::inverse() const {
    return whole_ring(field_).colon(*this);
}

Ideal Ideal::pow(int k) const {
    if (k < 0) throw invalid_input("Ideal::pow: negative exponent");
    Ideal r = whole_ring(field_);
    Ideal base = *this;
    while (k > 0) {
        if (k & 1) r = r.mul(base);
        k >>= 1;
        if (k) base = base.mul(base);
    }
    return r;
}

bool Ideal::contains(const FieldElement& x) const {
    const int d = field_->degree();
    std::vector<Int> v(static_cast<size_t>(d));
    for (int i = 0; i < d; i++) {
        Rat c = x.coord(i) * Rat(den_);
        if (!is_integer(c)) return false;
        v[size_t(i)] = c.get_num();
    }
    return solve_hnf(mat_, v).has_value();
}

bool Ideal::contains_ideal(const Ideal& o) const {
    for (const FieldElement& g : o.basis_elements())
        if (!contains(g)) return false;
    return true;
}

bool Ideal::coprime_to(const Ideal& o) const { return gcd(o).is_whole_ring(); }

bool Ideal::operator==(const Ideal& o) const {
    return den_ == o.den_ && mat_ == o.mat_;
}

Ideal different_ideal(const FieldPtr& K) {
    return Ideal::whole_ring(K).trace_dual().inverse();
}

Ideal denominator_ideal(const FieldElement& gamma) {
    if (gamma.is_zero()) throw invalid_input("denominator ideal of zero");
    const FieldPtr& K = gamma.field();
    Ideal O = Ideal::whole_ring(K);
    // {x : x*gamma in o} as a lattice, then intersect with o.
    QMat Mg_inv = inverse(gamma.mult_matrix());
    auto [Z, den] = clear_denominators(Mg_inv);
    Ideal lat = Ideal::from_lattice(K, Z, den);
    return lat.intersect(O);
}

Ideal g_invariant_ideal(const Ideal& b, const std::vector<int>& G) {
    if (G.empty()) throw invalid_input("g_invariant_ideal: empty automorphism set");
    const FieldPtr& K = b.field();
    std::optional<Ideal> acc;
    for (int t : G) {
        Ideal c = b.conjugate(K->galois_inverse(t));
        acc = acc ? acc->intersect(c) : c;
    }
    return *acc;
}

// ---- polynomial factorization mod p ----

namespace {

using PolyP = std::vector<long>;  // ascending coefficients mod p

long mulmod(long a, long b, long p) { return long((__int128)a * b % p); }

long powmod_l(long a, Int e, long p) {
    long r = 1;
    a %= p;
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) r = mulmod(r, a, p);
        a = mulmod(a, a, p);
        e >>= 1;
    }
    return r;
}

int pp_deg(const PolyP& f) {
    for (int i = int(f.size()) - 1; i >= 0; i--)
        if (f[size_t(i)] != 0) return i;
    return -1;
}

PolyP pp_trim(PolyP f) {
    f.resize(size_t(pp_deg(f) + 1));
    return f;
}

PolyP pp_monic(PolyP f, long p) {
    int d = pp_deg(f);
    if (d < 0) return f;
    long inv = powmod_l(f[size_t(d)], Int(p - 2), p);
    for (auto& c : f) c = mulmod(c, inv, p);
    return f;
}

PolyP pp_mul(const PolyP& a, const PolyP& b, long p) {
    if (a.empty() || b.empty()) return {};
    PolyP c(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); i++) {
        if (!a[i]) continue;
        for (size_t j = 0; j < b.size(); j++)
            c[i + j] = (c[i + j] + (__int128)a[i] * b[j]) % p;
    }
    return c;
}

PolyP pp_mod(PolyP a, const PolyP& b, long p) {
    int db = pp_deg(b);
    long lead_inv = powmod_l(b[size_t(db)], Int(p - 2), p);
    while (pp_deg(a) >= db) {
        int da = pp_deg(a);
        long f = mulmod(a[size_t(da)], lead_inv, p);
        for (int i = 0; i <= db; i++) {
            a[size_t(da - db + i)] =
                ((a[size_t(da - db + i)] - (__int128)f * b[size_t(i)]) % p + p) % p;
        }
    }
    return pp_trim(a);
}

PolyP pp_gcd(PolyP a, PolyP b, long p) {
    while (pp_deg(b) >= 0) {
        PolyP r = pp_mod(a, b, p);
        a = b;
        b = r;
    }
    return pp_monic(a, p);
}

PolyP pp_powmod(PolyP base, Int e, const PolyP& mod, long p) {
    PolyP r{1};
    base = pp_mod(std::move(base), mod, p);
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) r = pp_mod(pp_mul(r, base, p), mod, p);
        base = pp_mod(pp_mul(base, base, p), mod, p);
        e >>= 1;
    }
    return r;
}

PolyP pp_deriv(const PolyP& f, long p) {
    if (f.size() <= 1) return {};
    PolyP d(f.size() - 1);
    for (size_t i = 1; i < f.size(); i++) d[i - 1] = long((__int128)f[i] * long(i % p) % p);
    return pp_trim(d);
}

// Exact quotient a / b (b must divide a).
PolyP pp_div(const PolyP& a0, const PolyP& b, long p) {
    PolyP a = a0;
    int db = pp_deg(b), da = pp_deg(a);
    if (da < db) return {};
    PolyP quo(size_t(da - db) + 1, 0);
    long lead_inv = powmod_l(b[size_t(db)], Int(p - 2), p);
    while (pp_deg(a) >= db) {
        int d = pp_deg(a);
        long c = mulmod(a[size_t(d)], lead_inv, p);
        quo[size_t(d - db)] = c;
        for (int i = 0; i <= db; i++)
            a[size_t(d - db + i)] = ((a[size_t(d - db + i)] - (__int128)c * b[size_t(i)]) % p + p) % p;
    }
    return pp_trim(quo);
}

// Radical (product of distinct irreducible factors). Handles the
// characteristic-p collapse f' = 0 by extracting p-th roots, which is
// coefficient reindexing since Frobenius fixes F_p.
PolyP pp_radical(PolyP f, long p) {
    f = pp_monic(pp_trim(std::move(f)), p);
    if (pp_deg(f) <= 0) return PolyP{1};
    PolyP der = pp_deriv(f, p);
    if (pp_deg(der) < 0) {
        int d = pp_deg(f);
        PolyP v(size_t(d / p) + 1, 0);
        for (int i = 0; i * p <= d; i++) v[size_t(i)] = f[size_t(i * p)];
        return pp_radical(v, p);
    }
    PolyP g = pp_gcd(f, der, p);
    if (pp_deg(g) == 0) return f;
    PolyP w = pp_div(f, g, p);  // squarefree
    PolyP rg = pp_radical(g, p);
    PolyP gc = pp_gcd(w, rg, p);
    return pp_div(pp_mul(w, rg, p), gc, p);
}

// Equal-degree splitting (Cantor-Zassenhaus for odd p; exhaustive trial
// division for p = 2, where the candidate space is tiny).
void pp_edf(const PolyP& f, int k, long p, std::vector<PolyP>& out, Rng& rng) {
    int df = pp_deg(f);
    if (df == k) {
        out.push_back(pp_monic(f, p));
        return;
    }
    if (p == 2) {
        // trial divide by all monic polynomials of degree k
        for (long mask = 0; mask < (1L << k); mask++) {
            PolyP g(size_t(k) + 1, 0);
            g[size_t(k)] = 1;
            for (int i = 0; i < k; i++) g[size_t(i)] = (mask >> i) & 1;
            if (pp_deg(pp_gcd(f, g, p)) == k && pp_deg(pp_mod(f, g, p)) < 0) {
                out.push_back(g);
                pp_edf(pp_div(f, g, p), k, p, out, rng);
                return;
            }
        }
        throw error("equal-degree factorization failed at p=2");
    }
    Int exp = 1;
    for (int i = 0; i < k; i++) exp *= p;
    exp = (exp - 1) / 2;
    while (true) {
        PolyP r(size_t(df), 0);
        for (auto& c : r) c = long(rng.next_below(uint64_t(p)));
        PolyP t = pp_powmod(r, exp, f, p);
        if (!t.empty()) t[0] = (t[0] + p - 1) % p;  // t^((p^k-1)/2) - 1
        PolyP g = pp_gcd(f, t, p);
        int dg = pp_deg(g);
        if (dg > 0 && dg < df) {
            pp_edf(g, k, p, out, rng);
            pp_edf(pp_div(f, g, p), k, p, out, rng);
            return;
        }
    }
}

// Full factorization of a monic squarefree polynomial mod p.
std::vector<PolyP> pp_factor_squarefree(PolyP f, long p) {
    std::vector<PolyP> out;
    Rng rng(0x67716631UL);
    PolyP x{0, 1};
    PolyP h = x;
    int k = 0;
    while (pp_deg(f) > 0) {
        k++;
        h = pp_powmod(h, Int(p), f, p);  // h = x^(p^k) mod f
        PolyP hx = h;
        if (hx.size() < 2) hx.resize(2, 0);
        hx[1] = ((hx[1] - 1) % p + p) % p;
        PolyP g = pp_gcd(f, hx, p);
        if (pp_deg(g) > 0) {
            pp_edf(g, k, p, out, rng);
            f = pp_div(f, g, p);
        }
        if (k > 64) throw error("distinct-degree factorization did not terminate");
    }
    return out;
}

}  // namespace

Int power_basis_index(const FieldPtr& K) {
    // disc(f) = (-1)^(d(d-1)/2) Res(f, f') for monic f; index^2 = disc(f)/D_K.
    const auto& f = K->min_poly();
    const int d = int(f.size()) - 1;
    std::vector<Int> df(static_cast<size_t>(d));
    for (int i = 1; i <= d; i++) df[size_t(i - 1)] = Int(i) * f[size_t(i)];
    const int n = 2 * d - 1;
    ZMat S(n, n);
    for (int r = 0; r < d - 1; r++)
        for (int i = 0; i <= d; i++) S.at(r, r + (d - i)) = f[size_t(i)];
    for (int r = 0; r < d; r++)
        for (int i = 0; i < d; i++) S.at(d - 1 + r, r + (d - 1 - i)) = df[size_t(i)];
    Int res = det_bareiss(S);
    if ((d * (d - 1) / 2) % 2 == 1) res = -res;
    Int idx2 = res / K->discriminant();
    Int idx;
    mpz_sqrt(idx.get_mpz_t(), idx2.get_mpz_t());
    if (idx * idx != idx2) throw error("power basis index is not an integer");
    return idx;
}

std::vector<PrimeFactor> factor_prime(const FieldPtr& K, const Int& p) {
    if (p < 2 || mpz_probab_prime_p(p.get_mpz_t(), 30) == 0)
        throw invalid_input("factor_prime: p is not prime");
    Int idx = power_basis_index(K);
    if (idx % p == 0)
        throw unsupported_prime("prime " + p.get_str() + " divides the power basis index");
    if (!p.fits_slong_p()) throw unsupported_prime("prime too large for factorization");
    long pl = p.get_si();

    const auto& f = K->min_poly();
    const int d = int(f.size()) - 1;
    PolyP fp(f.size());
    for (size_t i = 0; i < f.size(); i++) fp[i] = long(fmod(f[i], p).get_si());

    std::vector<PolyP> irred = pp_factor_squarefree(pp_radical(fp, pl), pl);

    // theta over the integral basis: solve basis^T x = (0,1,0,...).
    QMat Bt = K->basis_in_powers().transpose();
    std::vector<Rat> rhs(static_cast<size_t>(d));
    rhs[size_t(std::min(1, d - 1))] = 1;
    auto theta_coords = solve(Bt, rhs);
    if (!theta_coords) throw error("could not express theta over the integral basis");
    FieldElement theta = K->element(*theta_coords);

    std::vector<PrimeFactor> out;
    int efr = 0;
    for (const PolyP& g : irred) {
        // multiplicity of g in fp
        int e = 0;
        PolyP rem = fp;
        while (pp_deg(rem) >= pp_deg(g) && pp_deg(pp_mod(rem, g, pl)) < 0) {
            e++;
            rem = pp_div(rem, g, pl);
        }
        if (e == 0) throw error("inconsistent factorization multiplicity");

        // g(theta)
        FieldElement gt = K->zero();
        FieldElement tp = K->one();
        for (size_t i = 0; i < g.size(); i++) {
            if (g[i]) gt = gt + tp.scaled(Rat(g[i]));
            if (i + 1 < g.size()) tp = tp * theta;
        }
        Ideal prime = Ideal::from_generators(K, {K->from_rat(Rat(p)), gt});
        int fdeg = pp_deg(g);
        Int np = prime.norm();
        Int expect = 1;
        for (int i = 0; i < fdeg; i++) expect *= p;
        if (np != expect) throw error("prime ideal norm mismatch in factor_prime");
        out.push_back({prime, e, fdeg});
        efr += e * fdeg;
    }
    if (efr != d) throw error("sum of e*f over primes does not reach the degree");
    return out;
}

int ord_p(const Ideal& prime, const Ideal& a) {
    // fractional a = I * (1/den): ord(a) = ord(I) - ord((den)).
    const FieldPtr& K = a.field();
    Ideal I = Ideal::from_lattice(K, a.mat(), 1);
    auto ord_integral = [&](const Ideal& b) {
        int v = 0;
        Ideal pk = prime;
        while (pk.contains_ideal(b)) {
            v++;
            pk = pk.mul(prime);
            if (v > 1000) throw error("runaway valuation");
        }
        return v;
    };
    int v = ord_integral(I);
    if (a.den() != 1) {
        Ideal denI = Ideal::principal(K->from_rat(Rat(a.den())));
        v -= ord_integral(denI);
    }
    return v;
}

int ord_p(const Ideal& prime, const FieldElement& x) {
    if (x.is_zero()) throw invalid_input("valuation of zero");
    return ord_p(prime, Ideal::principal(x));
}

std::vector<std::pair<Ideal, int>> factor_ideal(const Ideal& b) {
    if (!b.is_integral()) throw invalid_input("factor_ideal: not integral");
    const FieldPtr& K = b.field();
    Int N = b.norm();
    std::vector<std::pair<Ideal, int>> out;
    if (N == 1) return out;
    // rational prime divisors of the norm by trial division
    Int n = N;
    std::vector<Int> ps;
    for (Int p = 2; p * p <= n;) {
        if (n % p == 0) {
            ps.push_back(p);
            while (n % p == 0) n /= p;
        }
        p += (p == 2) ? 1 : 2;
    }
    if (n > 1) ps.push_back(n);

    Rat check(1);
    for (const Int& p : ps) {
        for (const PrimeFactor& pf : factor_prime(K, p)) {
            int v = ord_p(pf.prime, b);
            if (v > 0) {
                out.push_back({pf.prime, v});
                for (int i = 0; i < v; i++) check *= Rat(pf.prime.norm());
            }
        }
    }
    if (check != Rat(N)) throw error("factor_ideal: norms do not multiply up");
    return out;
}

std::vector<Ideal> divisors(const Ideal& b) {
    auto fact = factor_ideal(b);
    std::vector<Ideal> out{Ideal::whole_ring(b.field())};
    for (auto& [p, e] : fact) {
        std::vector<Ideal> next;
        Ideal pk = Ideal::whole_ring(b.field());
        for (int k = 0; k <= e; k++) {
            for (const Ideal& d : out) next.push_back(d.mul(pk));
            if (k < e) pk = pk.mul(p);
        }
        out = std::move(next);
        if (out.size() > 200000) throw budget_exceeded("too many divisors");
    }
    return out;
}

std::vector<Ideal> ideals_between(const Ideal& a) {
    if (!a.is_integral()) throw invalid_input("ideals_between: not integral");
    const FieldPtr& K = a.field();
    const int d = K->degree();
    const ZMat& H = a.mat();

    std::vector<std::vector<Int>> diag_divs(static_cast<size_t>(d));
    for (int i = 0; i < d; i++) {
        Int di = H.at(i, i);
        for (Int t = 1; t <= di; t++)
            if (di % t == 0) diag_divs[size_t(i)].push_back(t);
    }

    std::vector<Ideal> out;
    std::set<std::string> seen;
    // enumerate diagonal choices then off-diagonal entries
    std::vector<size_t> dsel(static_cast<size_t>(d), 0);
    while (true) {
        // candidate diag
        std::vector<Int> diag(static_cast<size_t>(d));
        Rat volume(1);
        for (int i = 0; i < d; i++) {
            diag[size_t(i)] = diag_divs[size_t(i)][dsel[size_t(i)]];
            volume *= Rat(diag[size_t(i)]);
        }
        // off-diagonal candidates: entries (i, j), i < j, in [0, diag_i)
        std::vector<std::pair<int, int>> slots;
        long combos = 1;
        for (int i = 0; i < d; i++)
            for (int j = i + 1; j < d; j++) {
                slots.push_back({i, j});
                combos *= diag[size_t(i)].get_si();
                if (combos > 2000000) throw budget_exceeded("ideals_between: too many candidates");
            }
        for (long c = 0; c < combos; c++) {
            ZMat M(d, d);
            long rem = c;
            for (int i = 0; i < d; i++) M.at(i, i) = diag[size_t(i)];
            for (auto [i, j] : slots) {
                long range = diag[size_t(i)].get_si();
                M.at(i, j) = rem % range;
                rem /= range;
            }
            // quick containment precheck, then exact construction
            bool contains_a = true;
            for (int j = 0; j < d && contains_a; j++) {
                std::vector<Int> col(static_cast<size_t>(d));
                for (int i = 0; i < d; i++) col[size_t(i)] = H.at(i, j);
                if (!solve_hnf(M, col)) contains_a = false;
            }
            if (!contains_a) continue;
            try {
                Ideal cand = Ideal::from_lattice(K, M, 1);
                std::string key;
                for (int i = 0; i < d; i++)
                    for (int j = 0; j < d; j++) key += cand.mat().at(i, j).get_str() + ",";
                if (seen.insert(key).second) out.push_back(cand);
            } catch (const validation_error&) {
                // not an o-module
            }
        }
        // advance diagonal selector
        int pos = 0;
        while (pos < d) {
            dsel[size_t(pos)]++;
            if (dsel[size_t(pos)] < diag_divs[size_t(pos)].size()) break;
            dsel[size_t(pos)] = 0;
            pos++;
        }
        if (pos == d) break;
    }
    return out;
}

int moebius(const Ideal& b) {
    auto fact = factor_ideal(b);
    for (auto& [p, e] : fact)
        if (e >= 2) return 0;
    return (fact.size() % 2 == 0) ? 1 : -1;
}

std::vector<Ideal> ideals_of_norm_up_to(const FieldPtr& K, long bound) {
    const int d = K->degree();
    std::vector<Ideal> out;
    std::set<std::string> seen;
    // upper-triangular HNF candidates with diagonal product <= bound
    std::vector<Int> diag(static_cast<size_t>(d), Int(1));
    std::function<void(int, long)> walk = [&](int row, long prod) {
        if (row == d) {
            // off-diagonal entries
            std::vector<std::pair<int, int>> slots;
            long combos = 1;
            for (int i = 0; i < d; i++)
                for (int j = i + 1; j < d; j++) {
                    slots.push_back({i, j});
                    combos *= diag[size_t(i)].get_si();
                }
            for (long c = 0; c < combos; c++) {
                ZMat M(d, d);
                for (int i = 0; i < d; i++) M.at(i, i) = diag[size_t(i)];
                long rem = c;
                for (auto [i, j] : slots) {
                    long range = diag[size_t(i)].get_si();
                    M.at(i, j) = rem % range;
                    rem /= range;
                }
                try {
                    Ideal cand = Ideal::from_lattice(K, M, 1);
                    if (cand.is_whole_ring()) continue;
                    std::string key;
                    for (int i = 0; i < d; i++)
                        for (int j = 0; j < d; j++) key += cand.mat().at(i, j).get_str() + ",";
                    if (seen.insert(key).second) out.push_back(cand);
                } catch (const validation_error&) {
                }
            }
            return;
        }
        for (long v = 1; prod * v <= bound; v++) {
            diag[size_t(row)] = v;
            walk(row + 1, prod * v);
        }
    };
    walk(0, 1);
    std::sort(out.begin(), out.end(),
              [](const Ideal& a, const Ideal& b) { return a.norm() < b.norm(); });
    return out;
}

std::optional<FieldElement> search_ideal_element(
    const Ideal& a, const std::function<bool(const FieldElement&)>& pred, int box_cap) {
    const FieldPtr& K = a.field();
    const int d = K->degree();
    std::vector<FieldElement> basis = a.basis_elements();
    for (long R = 1; R <= box_cap; R *= 2) {
        // enumerate coefficient vectors with max-norm exactly in (R/2, R]
        std::vector<long> c(static_cast<size_t>(d), -R);
        while (true) {
            long maxabs = 0;
            for (long v : c) maxabs = std::max(maxabs, std::abs(v));
            if (maxabs == R || (R == 1 && maxabs > 0)) {
                bool fresh = (R == 1) || (maxabs > R / 2);
                if (fresh) {
                    FieldElement x = K->zero();
                    for (int i = 0; i < d; i++)
                        if (c[size_t(i)] != 0) x = x + basis[size_t(i)].scaled(Rat(c[size_t(i)]));
                    if (!x.is_zero() && pred(x)) return x;
                }
            }
            int pos = 0;
            while (pos < d) {
                c[size_t(pos)]++;
                if (c[size_t(pos)] <= R) break;
                c[size_t(pos)] = -R;
                pos++;
            }
            if (pos == d) break;
        }
    }
    return std::nullopt;
}

std::pair<FieldElement, FieldElement> crt_split(const Ideal& b1, const Ideal& b2, int box_cap) {
    if (!b1.is_integral() || !b2.is_integral())
        throw invalid_input("crt_split: ideals must be integral");
    if (!b1.coprime_to(b2)) throw invalid_input("crt_split: ideals must be coprime");
    Ideal b = b1.mul(b2);
    auto find = [&](const Ideal& bi) {
        Ideal bi_inv = bi.inverse();
        auto pred = [&](const FieldElement& x) {
            Ideal q = Ideal::principal(x).mul(bi_inv);
            if (!q.is_integral()) return false;
            return q.coprime_to(b);
        };
        auto r = search_ideal_element(bi, pred, box_cap);
        if (!r)
            throw search_exhausted(
                "crt_split: no element with prescribed valuations within the box bound " +
                std::to_string(box_cap));
        return *r;
    };
    return {find(b1), find(b2)};
}

// ---- ResidueRing ----

ResidueRing::ResidueRing(Ideal b, long size_cap) : b_(std::move(b)) {
    if (!b_.is_integral()) throw invalid_input("ResidueRing: modulus must be integral");
    const int d = b_.field()->degree();
    n_ = 1;
    diag_.resize(static_cast<size_t>(d));
    for (int i = 0; i < d; i++) {
        if (!b_.mat().at(i, i).fits_slong_p()) throw budget_exceeded("residue ring too large");
        diag_[size_t(i)] = b_.mat().at(i, i).get_si();
        if (n_ > size_cap / std::max(1L, diag_[size_t(i)]))
            throw budget_exceeded("residue ring larger than the configured cap");
        n_ *= diag_[size_t(i)];
    }
}

std::vector<Int> ResidueRing::rep(long idx) const {
    std::vector<Int> v(diag_.size());
    for (size_t i = 0; i < diag_.size(); i++) {
        v[i] = idx % diag_[i];
        idx /= diag_[i];
    }
    return v;
}

FieldElement ResidueRing::rep_element(long idx) const {
    auto v = rep(idx);
    std::vector<Rat> c(v.size());
    for (size_t i = 0; i < v.size(); i++) c[i] = Rat(v[i]);
    return b_.field()->element(std::move(c));
}

long ResidueRing::index_of(const std::vector<Int>& coords) const {
    std::vector<Int> r = reduce_mod_hnf(b_.mat(), coords);
    long idx = 0, w = 1;
    for (size_t i = 0; i < diag_.size(); i++) {
        idx += r[i].get_si() * w;
        w *= diag_[i];
    }
    return idx;
}

long ResidueRing::index_of(const FieldElement& x) const {
    if (!x.is_integral()) throw invalid_input("ResidueRing: element is not integral");
    std::vector<Int> v(x.coords().size());
    for (size_t i = 0; i < v.size(); i++) v[i] = x.coord(int(i)).get_num();
    return index_of(v);
}

long ResidueRing::add(long i, long j) const {
    auto a = rep(i), b = rep(j);
    for (size_t k = 0; k < a.size(); k++) a[k] += b[k];
    return index_of(a);
}

long ResidueRing::neg(long i) const {
    auto a = rep(i);
    for (auto& v : a) v = -v;
    return index_of(a);
}

long ResidueRing::mul(long i, long j) const {
    const FieldPtr& K = b_.field();
    const int d = K->degree();
    auto a = rep(i), b = rep(j);
    std::vector<Int> c(static_cast<size_t>(d));
    for (int x = 0; x < d; x++) {
        if (a[size_t(x)] == 0) continue;
        for (int y = 0; y < d; y++) {
            if (b[size_t(y)] == 0) continue;
            Int f = a[size_t(x)] * b[size_t(y)];
            for (int k = 0; k < d; k++) {
                const Int& s = K->struct_const(x, y, k);
                if (s != 0) c[size_t(k)] += f * s;
            }
        }
    }
    return index_of(c);
}

bool ResidueRing::is_unit(long idx) const {
    FieldElement x = rep_element(idx);
    if (x.is_zero()) return false;
    return Ideal::principal(x).gcd(b_).is_whole_ring();
}

const std::vector<long>& ResidueRing::units() const {
    if (units_.empty()) {
        for (long i = 0; i < n_; i++)
            if (is_unit(i)) units_.push_back(i);
    }
    return units_;
}

long ResidueRing::inv(long idx) const {
    if (!is_unit(idx)) throw invalid_input("ResidueRing::inv of a non-unit");
    Int phi(long(units().size()));
    // a^(phi-1) = a^-1 for units
    Int e = phi - 1;
    long r = index_of(b_.field()->one());
    long base = idx;
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) r = mul(r, base);
        base = mul(base, base);
        e >>= 1;
    }
    return r;
}

}  // namespace gqf
