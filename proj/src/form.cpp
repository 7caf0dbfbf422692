#include "gqf/form.hpp"

#include <algorithm>
#include <cmath>

#include "gqf/rng.hpp"

namespace gqf {

GQF GQF::from_coeffs(FieldPtr field, int n, std::vector<FieldElement> dense) {
    GQF F;
    F.field_ = std::move(field);
    F.n_ = n;
    F.g_ = F.field_->galois_count();
    if (dense.size() != size_t(n) * F.g_ * size_t(n) * F.g_)
        throw invalid_input("coefficient tensor has wrong size");
    F.c_ = std::move(dense);
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < F.g_; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < F.g_; tj++)
                    if (F.c_[F.idx(i, ti, j, tj)] != F.c_[F.idx(j, tj, i, ti)])
                        throw validation_error("coefficient tensor is not symmetric");
    // appearing automorphisms; identity kept so ^G b is always defined
    std::vector<bool> seen(size_t(F.g_), false);
    seen[size_t(F.field_->galois_identity())] = true;
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < F.g_; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < F.g_; tj++)
                    if (!F.c_[F.idx(i, ti, j, tj)].is_zero()) {
                        seen[size_t(ti)] = true;
                        seen[size_t(tj)] = true;
                    }
    for (int t = 0; t < F.g_; t++)
        if (seen[size_t(t)]) F.gset_.push_back(t);
    return F;
}

bool GQF::is_integral() const {
    for (const auto& c : c_)
        if (!c.is_integral()) return false;
    return true;
}

bool GQF::is_zero() const {
    for (const auto& c : c_)
        if (!c.is_zero()) return false;
    return true;
}

FieldElement GQF::evaluate(const std::vector<FieldElement>& x) const {
    return bilinear(x, x);
}

FieldElement GQF::bilinear(const std::vector<FieldElement>& x,
                           const std::vector<FieldElement>& y) const {
    if (int(x.size()) != n_ || int(y.size()) != n_)
        throw invalid_input("vector length does not match the form");
    // conjugates precomputed once per argument
    std::vector<std::vector<FieldElement>> xc(static_cast<size_t>(n_)), yc(static_cast<size_t>(n_));
    for (int i = 0; i < n_; i++) {
        for (int t = 0; t < g_; t++) {
            xc[size_t(i)].push_back(x[size_t(i)].galois(t));
            yc[size_t(i)].push_back(y[size_t(i)].galois(t));
        }
    }
    FieldElement acc = field_->zero();
    for (int i = 0; i < n_; i++)
        for (int ti = 0; ti < g_; ti++)
            for (int j = 0; j < n_; j++)
                for (int tj = 0; tj < g_; tj++) {
                    const FieldElement& c = c_[idx(i, ti, j, tj)];
                    if (c.is_zero()) continue;
                    acc = acc + c * xc[size_t(i)][size_t(ti)] * yc[size_t(j)][size_t(tj)];
                }
    return acc;
}

GQF GQF::operator+(const GQF& o) const {
    if (n_ != o.n_ || field_.get() != o.field_.get())
        throw invalid_input("form addition across different shapes");
    std::vector<FieldElement> c = c_;
    for (size_t i = 0; i < c.size(); i++) c[i] = c[i] + o.c_[i];
    return from_coeffs(field_, n_, std::move(c));
}

GQF GQF::scaled(const Rat& f) const {
    std::vector<FieldElement> c = c_;
    for (auto& v : c) v = v.scaled(f);
    return from_coeffs(field_, n_, std::move(c));
}

bool GQF::operator==(const GQF& o) const {
    return n_ == o.n_ && g_ == o.g_ && c_ == o.c_;
}

GQF SpecialShape::to_gqf() const {
    const int g = field->galois_count();
    const int id = field->galois_identity();
    std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, field->zero());
    auto at = [&](int i, int ti, int j, int tj) -> FieldElement& {
        return c[((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj)];
    };
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            if (!a(i, j).is_zero()) at(i, id, j, id) = a(i, j);
        }
    for (int i = 0; i < m; i++)
        for (int j = 0; j < m; j++) {
            if (!r(i, j).is_zero()) at(i, tau, j, tau) = r(i, j);
        }
    return GQF::from_coeffs(field, n, std::move(c));
}

GQF make_special(const SpecialShape& s) {
    if (s.m < 1 || s.m > s.n) throw invalid_input("make_special: need 1 <= m <= n");
    if (s.tau == s.field->galois_identity() || s.tau < 0 || s.tau >= s.field->galois_count())
        throw invalid_input("make_special: tau must be a non-trivial automorphism");
    for (const auto& e : s.A)
        if (!e.is_integral()) throw invalid_input("make_special: A must be integral");
    for (const auto& e : s.R)
        if (!e.is_integral()) throw invalid_input("make_special: R must be integral");
    if (k_matrix_det(s.field, s.A, s.n).is_zero())
        throw invalid_input("make_special: det A vanishes");
    if (k_matrix_det(s.field, s.R, s.m).is_zero())
        throw invalid_input("make_special: upper-left block of B is singular");
    return s.to_gqf();
}

GQF make_diagonal(const std::vector<FieldElement>& a, const std::vector<FieldElement>& b,
                  int tau) {
    if (a.empty()) throw invalid_input("make_diagonal: need at least one coefficient");
    const FieldPtr& K = a[0].field();
    if (b.size() > a.size()) throw invalid_input("make_diagonal: m exceeds n");
    for (const auto& e : a)
        if (e.is_zero() || !e.is_integral())
            throw invalid_input("make_diagonal: coefficients must be nonzero integral");
    for (const auto& e : b)
        if (e.is_zero() || !e.is_integral())
            throw invalid_input("make_diagonal: coefficients must be nonzero integral");
    if (!b.empty() && (tau == K->galois_identity() || tau < 0 || tau >= K->galois_count()))
        throw invalid_input("make_diagonal: tau must be a non-trivial automorphism");

    const int n = int(a.size()), g = K->galois_count(), id = K->galois_identity();
    std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, K->zero());
    auto at = [&](int i, int ti, int j, int tj) -> FieldElement& {
        return c[((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj)];
    };
    for (int i = 0; i < n; i++) at(i, id, i, id) = a[size_t(i)];
    for (size_t i = 0; i < b.size(); i++) at(int(i), tau, int(i), tau) = b[i];
    return GQF::from_coeffs(K, n, std::move(c));
}

GQF make_partial_trace(const FieldPtr& field, const std::vector<int>& H, int n) {
    if (H.empty()) throw invalid_input("make_partial_trace: empty automorphism subset");
    const int g = field->galois_count(), d = field->degree();
    (void)d;
    std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, field->zero());
    auto at = [&](int i, int ti, int j, int tj) -> FieldElement& {
        return c[((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj)];
    };
    for (int i = 0; i < n; i++)
        for (int t : H) at(i, t, i, t) = at(i, t, i, t) + field->one();
    return GQF::from_coeffs(field, n, std::move(c));
}

std::optional<DiagonalShape> as_diagonal(const GQF& F) {
    const FieldPtr& K = F.field();
    const int n = F.vars(), g = F.gal(), id = K->galois_identity();
    DiagonalShape out;
    out.tau = -1;
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < g; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < g; tj++) {
                    const FieldElement& c = F.coeff(i, ti, j, tj);
                    if (c.is_zero()) continue;
                    if (i != j || ti != tj) return std::nullopt;
                    if (ti != id && out.tau >= 0 && out.tau != ti) return std::nullopt;
                    if (ti != id) out.tau = ti;
                }
    out.a.assign(size_t(n), K->zero());
    for (int i = 0; i < n; i++) out.a[size_t(i)] = F.coeff(i, id, i, id);
    // the conjugated block must occupy a prefix of the variables
    int m = 0;
    if (out.tau >= 0) {
        std::vector<FieldElement> b;
        for (int i = 0; i < n; i++) b.push_back(F.coeff(i, out.tau, i, out.tau));
        while (m < n && !b[size_t(m)].is_zero()) m++;
        for (int i = m; i < n; i++)
            if (!b[size_t(i)].is_zero()) return std::nullopt;
        b.resize(size_t(m));
        out.b = std::move(b);
    }
    for (const auto& e : out.a)
        if (e.is_zero()) return std::nullopt;  // eq:special requires nonzero a_i
    return out;
}

FieldElement k_matrix_det(const FieldPtr& K, const std::vector<FieldElement>& M, int n) {
    if (n == 0) return K->one();
    std::vector<FieldElement> A = M;
    auto at = [&](int i, int j) -> FieldElement& { return A[size_t(i) * n + size_t(j)]; };
    FieldElement det = K->one();
    for (int col = 0; col < n; col++) {
        int p = -1;
        for (int i = col; i < n; i++)
            if (!at(i, col).is_zero()) { p = i; break; }
        if (p < 0) return K->zero();
        if (p != col) {
            for (int j = 0; j < n; j++) std::swap(at(col, j), at(p, j));
            det = -det;
        }
        det = det * at(col, col);
        FieldElement inv = at(col, col).inverse();
        for (int i = col + 1; i < n; i++) {
            if (at(i, col).is_zero()) continue;
            FieldElement f = at(i, col) * inv;
            for (int j = col; j < n; j++) at(i, j) = at(i, j) - f * at(col, j);
        }
    }
    return det;
}

std::vector<std::vector<double>> embedded_system(const GQF& F) {
    const FieldPtr& K = F.field();
    const int n = F.vars(), g = F.gal(), d = K->degree();
    std::vector<std::vector<double>> M(size_t(d), std::vector<double>(size_t(d * n) * size_t(d * n), 0.0));
    for (int l = 0; l < d; l++) {
        auto& Ml = M[size_t(l)];
        for (int i = 0; i < n; i++)
            for (int ti = 0; ti < g; ti++)
                for (int j = 0; j < n; j++)
                    for (int tj = 0; tj < g; tj++) {
                        const FieldElement& c = F.coeff(i, ti, j, tj);
                        if (c.is_zero()) continue;
                        int bi = K->l_tau(K->galois_inverse(ti), l);
                        int bj = K->l_tau(K->galois_inverse(tj), l);
                        size_t row = size_t(bi) * n + size_t(i);
                        size_t col = size_t(bj) * n + size_t(j);
                        Ml[row * size_t(d * n) + col] += c.embed(l);
                    }
    }
    return M;
}

GQF dual_form(const GQF& F) {
    auto diag = as_diagonal(F);
    if (!diag) throw invalid_input("dual_form: form is not diagonal");
    const FieldPtr& K = F.field();
    FieldElement prod = K->one();
    for (const auto& e : diag->a) prod = prod * e;
    for (const auto& e : diag->b) prod = prod * e;
    std::vector<FieldElement> ga, gb;
    for (const auto& e : diag->a) ga.push_back(prod * e.inverse());
    for (const auto& e : diag->b) gb.push_back(prod * e.inverse());
    int tau = diag->tau >= 0 ? diag->tau : (K->galois_identity() == 0 ? 1 : 0);
    return make_diagonal(ga, gb, gb.empty() ? K->galois_identity() + 0 : tau);
}

AdmissibilityResult is_admissible(const GQF& F, int draws, uint64_t seed) {
    const FieldPtr& K = F.field();
    const int n = F.vars(), d = K->degree();
    AdmissibilityResult res;

    // Row block for a probe vector v: h |-> coordinates of B(v; h),
    // h running over rational coordinates u_{m,j} (h_j = sum_m u_{m,j} w_m).
    auto rows_for = [&](const std::vector<FieldElement>& v, QMat& M, int row0) {
        for (int m = 0; m < d; m++)
            for (int j = 0; j < n; j++) {
                std::vector<FieldElement> h(size_t(n), K->zero());
                h[size_t(j)] = K->basis_element(m);
                FieldElement val = F.bilinear(v, h);
                for (int p = 0; p < d; p++)
                    M.at(row0 + p, m * n + j) = val.coord(p);
            }
    };

    // Sound "no": the full pairing has a kernel vector.
    {
        QMat M(d * d * n, d * n);
        int r = 0;
        for (int k = 0; k < d; k++)
            for (int i = 0; i < n; i++) {
                std::vector<FieldElement> probe(size_t(n), K->zero());
                probe[size_t(i)] = K->basis_element(k);
                rows_for(probe, M, r);
                r += d;
            }
        if (kernel(M).cols() > 0) {
            res.verdict = Verdict::no;
            return res;
        }
    }

    // Randomized witnesses for "yes".
    Rng rng(seed);
    for (int t = 0; t < draws; t++) {
        std::vector<std::vector<FieldElement>> vs;
        QMat M(n * d, d * n);
        for (int i = 0; i < n; i++) {
            std::vector<FieldElement> v;
            for (int j = 0; j < n; j++) {
                std::vector<Rat> c(static_cast<size_t>(d));
                for (int m = 0; m < d; m++) c[size_t(m)] = Rat(rng.next_int(-5, 5));
                v.push_back(K->element(c));
            }
            vs.push_back(v);
            rows_for(v, M, i * d);
        }
        if (kernel(M).cols() == 0) {
            res.verdict = Verdict::yes;
            res.witnesses = std::move(vs);
            return res;
        }
    }
    res.verdict = Verdict::unknown;
    return res;
}

int coeff_rank(const GQF& F) {
    const FieldPtr& K = F.field();
    const int n = F.vars(), g = F.gal();
    const int N = n * g;
    std::vector<FieldElement> M;
    M.reserve(size_t(N) * N);
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < g; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < g; tj++) M.push_back(F.coeff(i, ti, j, tj));
    // elimination over K
    auto at = [&](int i, int j) -> FieldElement& { return M[size_t(i) * N + size_t(j)]; };
    int rank = 0;
    for (int col = 0; col < N && rank < N; col++) {
        int p = -1;
        for (int i = rank; i < N; i++)
            if (!at(i, col).is_zero()) { p = i; break; }
        if (p < 0) continue;
        if (p != rank)
            for (int j = 0; j < N; j++) std::swap(at(rank, j), at(p, j));
        FieldElement inv = at(rank, col).inverse();
        for (int i = rank + 1; i < N; i++) {
            if (at(i, col).is_zero()) continue;
            FieldElement f = at(i, col) * inv;
            for (int j = col; j < N; j++) at(i, j) = at(i, j) - f * at(rank, j);
        }
        rank++;
    }
    return rank;
}

namespace {

double poly_eval(const std::vector<double>& p, double x) {
    double v = 0;
    for (int i = int(p.size()) - 1; i >= 0; i--) v = v * x + p[size_t(i)];
    return v;
}

// All real points where |p| is (numerically) zero, including touching
// roots, via recursive critical-point subdivision.
std::vector<double> real_roots_double(const std::vector<double>& p, double tol) {
    int deg = int(p.size()) - 1;
    while (deg >= 0 && std::abs(p[size_t(deg)]) < tol) deg--;
    if (deg <= 0) return {};
    if (deg == 1) return {-p[0] / p[1]};
    std::vector<double> dp(static_cast<size_t>(deg));
    for (int i = 1; i <= deg; i++) dp[size_t(i - 1)] = i * p[size_t(i)];
    std::vector<double> crit = real_roots_double(dp, tol);
    double bound = 1;
    for (int i = 0; i < deg; i++)
        bound = std::max(bound, 2 * std::abs(p[size_t(i)] / p[size_t(deg)]));
    std::vector<double> pts{-bound - 1};
    for (double c : crit)
        if (std::abs(c) < bound + 1) pts.push_back(c);
    pts.push_back(bound + 1);
    std::sort(pts.begin(), pts.end());

    std::vector<double> roots;
    for (size_t i = 0; i + 1 < pts.size(); i++) {
        double a = pts[i], b = pts[i + 1];
        double fa = poly_eval(p, a), fb = poly_eval(p, b);
        if (fa == 0) roots.push_back(a);
        if (fa * fb < 0) {
            for (int it = 0; it < 200; it++) {
                double m = (a + b) / 2, fm = poly_eval(p, m);
                if (fm == 0) { a = b = m; break; }
                if (fa * fm < 0) { b = m; fb = fm; }
                else { a = m; fa = fm; }
            }
            roots.push_back((a + b) / 2);
        }
    }
    // touching roots at critical points
    for (double c : crit)
        if (std::abs(poly_eval(p, c)) < tol * (1 + std::abs(c))) roots.push_back(c);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                roots.end());
    return roots;
}

int numeric_rank(std::vector<std::vector<double>> M, double tol) {
    int n = int(M.size());
    if (n == 0) return 0;
    int m = int(M[0].size());
    int rank = 0;
    for (int col = 0; col < m && rank < n; col++) {
        int piv = -1;
        double best = tol;
        for (int i = rank; i < n; i++)
            if (std::abs(M[size_t(i)][size_t(col)]) > best) {
                best = std::abs(M[size_t(i)][size_t(col)]);
                piv = i;
            }
        if (piv < 0) continue;
        std::swap(M[size_t(rank)], M[size_t(piv)]);
        for (int i = 0; i < n; i++) {
            if (i == rank) continue;
            double f = M[size_t(i)][size_t(col)] / M[size_t(rank)][size_t(col)];
            for (int j = col; j < m; j++) M[size_t(i)][size_t(j)] -= f * M[size_t(rank)][size_t(j)];
        }
        rank++;
    }
    return rank;
}

}  // namespace

AssumptionReport check_assumptions(const SpecialShape& s, uint64_t seed) {
    const FieldPtr& K = s.field;
    const int n = s.n, m = s.m, d = K->degree();
    AssumptionReport rep;
    rep.det_A = k_matrix_det(K, s.A, n);
    rep.det_R_block = k_matrix_det(K, s.R, m);
    rep.det_conditions_ok = !rep.det_A.is_zero() && !rep.det_R_block.is_zero();

    // B as full n x n matrix
    std::vector<FieldElement> B(size_t(n) * n, K->zero());
    for (int i = 0; i < m; i++)
        for (int j = 0; j < m; j++) B[size_t(i) * n + size_t(j)] = s.r(i, j);

    rep.degree_condition_ok = true;
    Verdict rank_overall = Verdict::yes;
    for (int l = 0; l < d; l++) {
        PencilReport pr;
        pr.l = l;
        int ltau = K->l_tau(s.tau, l);
        // interpolate det(A^(l) + t B^(ltau)) at n+1 points
        std::vector<double> ts, ys;
        for (int k = 0; k <= n; k++) {
            double t = double(k);
            std::vector<std::vector<double>> M(size_t(n), std::vector<double>(size_t(n), 0.0));
            for (int i = 0; i < n; i++)
                for (int j = 0; j < n; j++)
                    M[size_t(i)][size_t(j)] =
                        s.a(i, j).embed(l) + t * B[size_t(i) * n + size_t(j)].embed(ltau);
            // determinant via LU
            double det = 1;
            for (int c = 0; c < n; c++) {
                int piv = c;
                for (int i = c + 1; i < n; i++)
                    if (std::abs(M[size_t(i)][size_t(c)]) > std::abs(M[size_t(piv)][size_t(c)])) piv = i;
                if (std::abs(M[size_t(piv)][size_t(c)]) < 1e-300) { det = 0; break; }
                if (piv != c) {
                    std::swap(M[size_t(c)], M[size_t(piv)]);
                    det = -det;
                }
                det *= M[size_t(c)][size_t(c)];
                for (int i = c + 1; i < n; i++) {
                    double f = M[size_t(i)][size_t(c)] / M[size_t(c)][size_t(c)];
                    for (int j = c; j < n; j++) M[size_t(i)][size_t(j)] -= f * M[size_t(c)][size_t(j)];
                }
            }
            ts.push_back(t);
            ys.push_back(det);
        }
        // Newton divided differences -> monomial coefficients
        std::vector<double> dd = ys;
        for (int k = 1; k <= n; k++)
            for (int i = n; i >= k; i--)
                dd[size_t(i)] = (dd[size_t(i)] - dd[size_t(i - 1)]) / (ts[size_t(i)] - ts[size_t(i - k)]);
        std::vector<double> poly{dd[size_t(n)]};
        for (int k = n - 1; k >= 0; k--) {
            // poly = poly*(t - ts[k]) + dd[k]
            std::vector<double> np(poly.size() + 1, 0.0);
            for (size_t i = 0; i < poly.size(); i++) {
                np[i + 1] += poly[i];
                np[i] -= poly[i] * ts[size_t(k)];
            }
            np[0] += dd[size_t(k)];
            poly = np;
        }
        double scale = 0;
        for (double c : poly) scale = std::max(scale, std::abs(c));
        scale = std::max(scale, 1.0);
        pr.det_poly = poly;
        pr.degree = -1;
        for (int i = int(poly.size()) - 1; i >= 0; i--)
            if (std::abs(poly[size_t(i)]) > 1e-8 * scale) { pr.degree = i; break; }
        pr.degree_ok = (pr.degree >= m - 1);
        if (!pr.degree_ok) rep.degree_condition_ok = false;

        // Assumption on ranks: examine real roots of the determinant.
        std::vector<double> norm_poly = poly;
        for (auto& c : norm_poly) c /= scale;
        pr.suspicious_t = real_roots_double(norm_poly, 1e-10);
        pr.rank_ok = Verdict::yes;
        for (double t0 : pr.suspicious_t) {
            std::vector<std::vector<double>> M(size_t(n), std::vector<double>(size_t(n), 0.0));
            double mscale = 0;
            for (int i = 0; i < n; i++)
                for (int j = 0; j < n; j++) {
                    M[size_t(i)][size_t(j)] =
                        s.a(i, j).embed(l) + t0 * B[size_t(i) * n + size_t(j)].embed(ltau);
                    mscale = std::max(mscale, std::abs(M[size_t(i)][size_t(j)]));
                }
            mscale = std::max(mscale, 1.0);
            int r_lo = numeric_rank(M, 1e-6 * mscale);
            int r_hi = numeric_rank(M, 1e-10 * mscale);
            if (r_hi <= n - 2) {
                pr.rank_ok = Verdict::no;
                break;
            }
            if (r_lo <= n - 2) pr.rank_ok = Verdict::unknown;  // tolerance window
        }
        if (pr.rank_ok == Verdict::no) rank_overall = Verdict::no;
        else if (pr.rank_ok == Verdict::unknown && rank_overall == Verdict::yes)
            rank_overall = Verdict::unknown;
        rep.pencils.push_back(std::move(pr));
    }
    rep.rank_condition = rank_overall;

    // Randomized Jacobian probe of the embedded system (equivalent to the
    // descended system up to the invertible W transform).
    {
        GQF F = s.to_gqf();
        auto mats = embedded_system(F);
        Rng rng(seed);
        int best = 0;
        for (int trial = 0; trial < 8; trial++) {
            std::vector<double> x(size_t(d * n));
            for (auto& v : x) v = rng.next_in(-1, 1);
            std::vector<std::vector<double>> J(size_t(d), std::vector<double>(size_t(d * n), 0.0));
            for (int l = 0; l < d; l++)
                for (int r = 0; r < d * n; r++) {
                    double g = 0;
                    for (int c2 = 0; c2 < d * n; c2++)
                        g += 2 * mats[size_t(l)][size_t(r) * size_t(d * n) + size_t(c2)] * x[size_t(c2)];
                    J[size_t(l)][size_t(r)] = g;
                }
            best = std::max(best, numeric_rank(J, 1e-8));
        }
        rep.jacobian_probe_rank = best;
        rep.codimension_probe_ok = (best == d);
    }
    return rep;
}

}  // namespace gqf
