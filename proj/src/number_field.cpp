#include "gqf/number_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gqf {

namespace {

// ---- small exact polynomial toolkit (coefficients ascending) ----

using Poly = std::vector<Rat>;

int pdeg(const Poly& p) {
    for (int i = int(p.size()) - 1; i >= 0; i--)
        if (p[size_t(i)] != 0) return i;
    return -1;
}

Poly ptrim(Poly p) {
    p.resize(size_t(pdeg(p) + 1));
    return p;
}

Poly pmul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1);
    for (size_t i = 0; i < a.size(); i++) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size(); j++) c[i + j] += a[i] * b[j];
    }
    return c;
}

// Remainder of a by b (b nonzero).
Poly prem(Poly a, const Poly& b) {
    int db = pdeg(b);
    Rat lead = b[size_t(db)];
    while (pdeg(a) >= db && db >= 0) {
        int da = pdeg(a);
        Rat f = a[size_t(da)] / lead;
        for (int i = 0; i <= db; i++) a[size_t(da - db + i)] -= f * b[size_t(i)];
        a[size_t(da)] = 0;
    }
    return ptrim(a);
}

Poly pderiv(const Poly& p) {
    if (p.size() <= 1) return {};
    Poly d(p.size() - 1);
    for (size_t i = 1; i < p.size(); i++) d[i - 1] = Rat(long(i)) * p[i];
    return d;
}

Rat peval(const Poly& p, const Rat& x) {
    Rat v = 0;
    for (int i = int(p.size()) - 1; i >= 0; i--) v = v * x + p[size_t(i)];
    return v;
}

double peval_d(const std::vector<double>& p, double x) {
    double v = 0;
    for (int i = int(p.size()) - 1; i >= 0; i--) v = v * x + p[size_t(i)];
    return v;
}

int sign_variations(const std::vector<Poly>& chain, const Rat& x) {
    int var = 0, last = 0;
    for (const Poly& p : chain) {
        Rat v = peval(p, x);
        int s = sgn(v);
        if (s == 0) continue;
        if (last != 0 && s != last) var++;
        last = s;
    }
    return var;
}

}  // namespace

std::vector<double> real_roots(const std::vector<Int>& monic) {
    const int d = int(monic.size()) - 1;
    Poly p(monic.size());
    for (size_t i = 0; i < monic.size(); i++) p[i] = Rat(monic[i]);

    // Sturm chain; a nonconstant last element means repeated roots.
    std::vector<Poly> chain{ptrim(p), ptrim(pderiv(p))};
    while (pdeg(chain.back()) > 0) {
        Poly r = prem(chain[chain.size() - 2], chain.back());
        if (pdeg(r) < 0) break;
        for (auto& c : r) c = -c;
        chain.push_back(r);
    }
    if (pdeg(chain.back()) > 0)
        throw validation_error("min_poly has repeated roots");

    Int maxc = 0;
    for (int i = 0; i < d; i++) maxc = std::max(maxc, Int(abs(monic[size_t(i)])));
    Rat bound = Rat(maxc) + 2;

    auto count = [&](const Rat& a, const Rat& b) {
        return sign_variations(chain, a) - sign_variations(chain, b);
    };

    int total = count(-bound, bound);
    if (total != d)
        throw validation_error("min_poly is not totally real: " + std::to_string(total) +
                               " real roots, degree " + std::to_string(d));

    // Isolate by bisection on exact rationals.
    struct Iv { Rat a, b; int n; };
    std::vector<Iv> work{{-bound, bound, total}}, isolated;
    while (!work.empty()) {
        Iv iv = work.back();
        work.pop_back();
        if (iv.n == 0) continue;
        if (iv.n == 1) {
            isolated.push_back(iv);
            continue;
        }
        Rat mid = (iv.a + iv.b) / 2;
        // Nudge off a root if we hit one exactly.
        while (peval(p, mid) == 0) mid += (iv.b - iv.a) / 1000;
        int left = count(iv.a, mid);
        work.push_back({iv.a, mid, left});
        work.push_back({mid, iv.b, iv.n - left});
    }

    std::vector<double> pd(monic.size());
    for (size_t i = 0; i < monic.size(); i++) pd[i] = monic[i].get_d();
    std::vector<double> dd;
    {
        for (size_t i = 1; i < pd.size(); i++) dd.push_back(double(i) * pd[i]);
    }

    std::vector<double> roots;
    for (auto& iv : isolated) {
        // Exact bisection until the interval is tight, then Newton polish.
        Rat a = iv.a, b = iv.b;
        int sa = sgn(peval(p, a));
        for (int it = 0; it < 80 && (b - a) > Rat(1, 1 << 30); it++) {
            Rat mid = (a + b) / 2;
            Rat v = peval(p, mid);
            if (v == 0) { a = mid; b = mid; break; }
            if (sgn(v) == sa) a = mid;
            else b = mid;
        }
        double x = (a.get_d() + b.get_d()) / 2;
        for (int it = 0; it < 100; it++) {
            double f = peval_d(pd, x), df = peval_d(dd, x);
            if (df == 0) break;
            double nx = x - f / df;
            if (std::abs(nx - x) < 1e-16 * (1 + std::abs(x))) { x = nx; break; }
            x = nx;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// ---- FieldElement ----

FieldElement::FieldElement(FieldPtr field, std::vector<Rat> coords)
    : field_(std::move(field)), coords_(std::move(coords)) {
    if (int(coords_.size()) != field_->degree())
        throw invalid_input("element coordinate count does not match field degree");
}

void FieldElement::check_same_field(const FieldElement& o) const {
    if (field_.get() == o.field_.get()) return;
    if (field_ && o.field_ && field_->same_field(*o.field_)) return;
    throw invalid_input("elements belong to different fields");
}

bool FieldElement::is_zero() const {
    for (const Rat& c : coords_)
        if (c != 0) return false;
    return true;
}

bool FieldElement::is_integral() const {
    for (const Rat& c : coords_)
        if (!is_integer(c)) return false;
    return true;
}

Int FieldElement::denominator() const {
    Int den = 1;
    for (const Rat& c : coords_) {
        Int l;
        mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), c.get_den().get_mpz_t());
        den = l;
    }
    return den;
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
    check_same_field(o);
    std::vector<Rat> c(coords_);
    for (size_t i = 0; i < c.size(); i++) c[i] += o.coords_[i];
    return FieldElement(field_, std::move(c));
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
    check_same_field(o);
    std::vector<Rat> c(coords_);
    for (size_t i = 0; i < c.size(); i++) c[i] -= o.coords_[i];
    return FieldElement(field_, std::move(c));
}

FieldElement FieldElement::operator-() const {
    std::vector<Rat> c(coords_);
    for (auto& v : c) v = -v;
    return FieldElement(field_, std::move(c));
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
    check_same_field(o);
    const int d = field_->degree();
    std::vector<Rat> c(static_cast<size_t>(d));
    for (int i = 0; i < d; i++) {
        if (coords_[size_t(i)] == 0) continue;
        for (int j = 0; j < d; j++) {
            if (o.coords_[size_t(j)] == 0) continue;
            Rat f = coords_[size_t(i)] * o.coords_[size_t(j)];
            for (int k = 0; k < d; k++) {
                const Int& s = field_->struct_const(i, j, k);
                if (s != 0) c[size_t(k)] += f * Rat(s);
            }
        }
    }
    return FieldElement(field_, std::move(c));
}

FieldElement FieldElement::scaled(const Rat& f) const {
    std::vector<Rat> c(coords_);
    for (auto& v : c) v *= f;
    return FieldElement(field_, std::move(c));
}

bool FieldElement::operator==(const FieldElement& o) const {
    if (!field_ || !o.field_) return !field_ && !o.field_;
    check_same_field(o);
    return coords_ == o.coords_;
}

Rat FieldElement::trace() const {
    Rat t = 0;
    for (int j = 0; j < field_->degree(); j++)
        t += coords_[size_t(j)] * field_->basis_trace(j);
    return t;
}

QMat FieldElement::mult_matrix() const {
    const int d = field_->degree();
    QMat M(d, d);
    for (int i = 0; i < d; i++) {   // column i: x * w_{i+1}
        for (int j = 0; j < d; j++) {
            if (coords_[size_t(j)] == 0) continue;
            for (int k = 0; k < d; k++) {
                const Int& s = field_->struct_const(j, i, k);
                if (s != 0) M.at(k, i) += coords_[size_t(j)] * Rat(s);
            }
        }
    }
    return M;
}

Rat FieldElement::norm() const {
    // Determinant of the multiplication matrix by exact elimination.
    QMat M = mult_matrix();
    const int n = M.rows();
    Rat det = 1;
    for (int col = 0; col < n; col++) {
        int p = -1;
        for (int i = col; i < n; i++)
            if (M.at(i, col) != 0) { p = i; break; }
        if (p < 0) return 0;
        if (p != col) {
            for (int j = 0; j < n; j++) swap(M.at(col, j), M.at(p, j));
            det = -det;
        }
        det *= M.at(col, col);
        Rat inv = 1 / M.at(col, col);
        for (int i = col + 1; i < n; i++) {
            if (M.at(i, col) == 0) continue;
            Rat f = M.at(i, col) * inv;
            for (int j = col; j < n; j++) M.at(i, j) -= f * M.at(col, j);
        }
    }
    return det;
}

FieldElement FieldElement::galois(int t) const {
    return FieldElement(field_, field_->galois()[size_t(t)].mul_vec(coords_));
}

FieldElement FieldElement::inverse() const {
    if (is_zero()) throw invalid_input("inverse of zero");
    const int d = field_->degree();
    std::vector<Rat> e1(static_cast<size_t>(d));
    e1[0] = 1;
    auto sol = solve(mult_matrix(), e1);
    if (!sol) throw invalid_input("inverse: multiplication matrix singular (not a field?)");
    return FieldElement(field_, std::move(*sol));
}

double FieldElement::embed(int l) const {
    double v = 0;
    for (int j = 0; j < field_->degree(); j++)
        v += to_double(coords_[size_t(j)]) * field_->embedding(l, j);
    return v;
}

std::string FieldElement::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (int j = 0; j < field_->degree(); j++) {
        const Rat& c = coords_[size_t(j)];
        if (c == 0) continue;
        if (!first) os << (c > 0 ? " + " : " - ");
        Rat a = (first || c > 0) ? c : Rat(-c);
        if (j == 0) os << a.get_str();
        else {
            if (a != 1) os << a.get_str() << "*";
            os << "w" << (j + 1);
        }
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

// ---- NumberField ----

FieldElement NumberField::element(std::vector<Rat> coords) const {
    return FieldElement(shared_from_this(), std::move(coords));
}

FieldElement NumberField::from_rat(const Rat& q) const {
    std::vector<Rat> c(static_cast<size_t>(d_));
    c[0] = q;
    return element(std::move(c));
}

FieldElement NumberField::basis_element(int j) const {
    std::vector<Rat> c(static_cast<size_t>(d_));
    c[size_t(j)] = 1;
    return element(std::move(c));
}

std::vector<FieldElement> NumberField::dual_basis() const {
    std::vector<FieldElement> out;
    for (int i = 0; i < d_; i++) {
        std::vector<Rat> c(static_cast<size_t>(d_));
        for (int k = 0; k < d_; k++) c[size_t(k)] = gram_inv_.at(i, k);
        out.push_back(element(std::move(c)));
    }
    return out;
}

bool NumberField::same_field(const NumberField& o) const {
    if (d_ != o.d_ || min_poly_ != o.min_poly_ || !(basis_ == o.basis_)) return false;
    if (galois_.size() != o.galois_.size()) return false;
    for (const QMat& g : galois_) {
        bool found = false;
        for (const QMat& h : o.galois_)
            if (g == h) { found = true; break; }
        if (!found) return false;
    }
    return true;
}

FieldPtr NumberField::real_quadratic(const Int& D) {
    if (D <= 1) throw invalid_input("real_quadratic: D must exceed 1");
    for (Int p = 2; p * p <= D; p++)
        if (D % (p * p) == 0) throw invalid_input("real_quadratic: D is not squarefree");

    FieldDesc desc;
    desc.min_poly = {-D, Int(0), Int(1)};  // x^2 - D
    bool half = (fmod(D, Int(4)) == 1);
    if (half) {
        desc.basis = {{Rat(1), Rat(0)}, {Rat(1, 2), Rat(1, 2)}};  // 1, (1+sqrt D)/2
        QMat id = QMat::identity(2);
        QMat tau(2, 2);
        tau.at(0, 0) = 1; tau.at(0, 1) = 1;
        tau.at(1, 0) = 0; tau.at(1, 1) = -1;
        desc.galois_mats = {id, tau};
    } else {
        desc.basis = {{Rat(1), Rat(0)}, {Rat(0), Rat(1)}};  // 1, sqrt D
        QMat id = QMat::identity(2);
        QMat tau(2, 2);
        tau.at(0, 0) = 1; tau.at(1, 1) = -1;
        desc.galois_mats = {id, tau};
    }
    return from_description(desc);
}

FieldPtr NumberField::from_description(const FieldDesc& desc) {
    auto field = std::shared_ptr<NumberField>(new NumberField());

    std::vector<Int> mp = desc.min_poly;
    if (mp.size() < 2) throw validation_error("min_poly must have degree >= 1");
    if (mp.back() != 1) mp.push_back(1);  // leading coefficient omitted
    if (mp.back() != 1) throw validation_error("min_poly must be monic");
    field->min_poly_ = mp;
    const int d = int(mp.size()) - 1;
    field->d_ = d;
    if (d < 1) throw validation_error("degree must be at least 1");

    if (int(desc.basis.size()) != d)
        throw validation_error("basis must contain exactly degree-many elements");
    QMat B(d, d);
    for (int j = 0; j < d; j++) {
        if (int(desc.basis[size_t(j)].size()) != d)
            throw validation_error("basis element has wrong coordinate count");
        for (int i = 0; i < d; i++) B.at(j, i) = desc.basis[size_t(j)][size_t(i)];
    }
    field->basis_ = B;
    if (!(B.at(0, 0) == 1)) throw validation_error("first basis element must be 1");
    for (int i = 1; i < d; i++)
        if (B.at(0, i) != 0) throw validation_error("first basis element must be 1");

    // Galois matrices either given directly or recovered from permutations.
    std::vector<QMat> gal = desc.galois_mats;
    field->finish_construction();

    if (gal.empty() && !desc.galois_perms.empty()) {
        // Recover tau from the action rho_l(tau x) = rho_{perm(l)}(x):
        // M = A^{-1} P A numerically, then rational reconstruction.
        const auto& emb = field->emb_;
        QMat recovered;
        for (const auto& perm : desc.galois_perms) {
            if (int(perm.size()) != d) throw validation_error("galois permutation has wrong size");
            std::vector<std::vector<double>> Ad(size_t(d), std::vector<double>(size_t(d), 0.0));
            std::vector<std::vector<double>> PA = Ad;
            for (int l = 0; l < d; l++)
                for (int j = 0; j < d; j++) {
                    Ad[size_t(l)][size_t(j)] = emb[size_t(l)][size_t(j)];
                    PA[size_t(l)][size_t(j)] = emb[size_t(perm[size_t(l)])][size_t(j)];
                }
            // Solve Ad * M = PA column by column (Gaussian elimination, doubles).
            QMat M(d, d);
            for (int col = 0; col < d; col++) {
                std::vector<std::vector<double>> aug(size_t(d), std::vector<double>(size_t(d) + 1, 0.0));
                for (int i = 0; i < d; i++) {
                    for (int j = 0; j < d; j++) aug[size_t(i)][size_t(j)] = Ad[size_t(i)][size_t(j)];
                    aug[size_t(i)][size_t(d)] = PA[size_t(i)][size_t(col)];
                }
                for (int c2 = 0; c2 < d; c2++) {
                    int piv = c2;
                    for (int i = c2 + 1; i < d; i++)
                        if (std::abs(aug[size_t(i)][size_t(c2)]) > std::abs(aug[size_t(piv)][size_t(c2)])) piv = i;
                    std::swap(aug[size_t(c2)], aug[size_t(piv)]);
                    for (int i = 0; i < d; i++) {
                        if (i == c2) continue;
                        double f = aug[size_t(i)][size_t(c2)] / aug[size_t(c2)][size_t(c2)];
                        for (int j = c2; j <= d; j++) aug[size_t(i)][size_t(j)] -= f * aug[size_t(c2)][size_t(j)];
                    }
                }
                for (int i = 0; i < d; i++) {
                    double v = aug[size_t(i)][size_t(d)] / aug[size_t(i)][size_t(i)];
                    // rational reconstruction by continued fractions
                    long den_cap = 1000000;
                    long best_p = 0, best_q = 1;
                    double x = v;
                    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
                    for (int it = 0; it < 64; it++) {
                        double fl = std::floor(x);
                        long a = long(fl);
                        long p2 = a * p1 + p0, q2 = a * q1 + q0;
                        if (q2 > den_cap || q2 < 0) break;
                        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
                        best_p = p1; best_q = q1;
                        double rem = x - fl;
                        if (std::abs(double(p1) / double(q1) - v) < 1e-12) break;
                        if (rem < 1e-15) break;
                        x = 1.0 / rem;
                    }
                    if (std::abs(double(best_p) / double(best_q) - v) > 1e-9)
                        throw validation_error(
                            "could not recover a rational Galois matrix from the permutation; "
                            "supply coordinate matrices instead");
                    M.at(i, col) = Rat(best_p, best_q);
                }
            }
            gal.push_back(M);
        }
    }
    if (gal.empty()) throw validation_error("no Galois action supplied");
    field->galois_ = gal;
    field->validate_galois_and_index();
    return field;
}

void NumberField::finish_construction() {
    const int d = d_;

    // theta-power coordinates of basis elements live in rows of basis_;
    // basis_inv_ maps theta-power coords to omega coords.
    basis_inv_ = inverse(basis_.transpose());

    // Reduce theta^k mod min_poly for k up to 2d-2.
    std::vector<std::vector<Rat>> theta_pow(size_t(2 * d - 1), std::vector<Rat>(static_cast<size_t>(d)));
    theta_pow[0][0] = 1;
    for (int k = 1; k <= 2 * d - 2; k++) {
        // multiply previous by theta
        std::vector<Rat> prev = theta_pow[size_t(k - 1)];
        std::vector<Rat> cur(static_cast<size_t>(d));
        Rat top = prev[size_t(d - 1)];
        for (int i = d - 1; i >= 1; i--) cur[size_t(i)] = prev[size_t(i - 1)];
        cur[0] = 0;
        if (top != 0)
            for (int i = 0; i < d; i++) cur[size_t(i)] -= top * Rat(min_poly_[size_t(i)]);
        theta_pow[size_t(k)] = cur;
    }

    struct_.assign(size_t(d) * d * d, Int(0));
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            // product of basis rows i and j in theta powers
            std::vector<Rat> prod(static_cast<size_t>(d));
            for (int a = 0; a < d; a++) {
                if (basis_.at(i, a) == 0) continue;
                for (int b = 0; b < d; b++) {
                    if (basis_.at(j, b) == 0) continue;
                    Rat f = basis_.at(i, a) * basis_.at(j, b);
                    const auto& tp = theta_pow[size_t(a + b)];
                    for (int k = 0; k < d; k++) prod[size_t(k)] += f * tp[size_t(k)];
                }
            }
            std::vector<Rat> omega = basis_inv_.mul_vec(prod);
            for (int k = 0; k < d; k++) {
                if (!is_integer(omega[size_t(k)]))
                    throw validation_error(
                        "basis is not closed under multiplication (structure constant " +
                        omega[size_t(k)].get_str() + " at w" + std::to_string(i + 1) + "*w" +
                        std::to_string(j + 1) + ")");
                struct_[(size_t(i) * d + size_t(j)) * d + size_t(k)] = omega[size_t(k)].get_num();
            }
        }

    // commutativity + identity come from the construction; trace form next.
    std::vector<Rat> tr_basis(static_cast<size_t>(d));
    for (int j = 0; j < d; j++) {
        Rat t = 0;
        for (int i = 0; i < d; i++) t += Rat(struct_const(j, i, i));
        tr_basis[size_t(j)] = t;
    }
    gram_ = QMat(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            Rat t = 0;
            for (int k = 0; k < d; k++)
                t += Rat(struct_const(i, j, k)) * tr_basis[size_t(k)];
            gram_.at(i, j) = t;
        }
    gram_inv_ = inverse(gram_);

    // Discriminant: determinant of the trace Gram matrix.
    {
        QMat M = gram_;
        Rat det = 1;
        for (int col = 0; col < d; col++) {
            int p = -1;
            for (int i = col; i < d; i++)
                if (M.at(i, col) != 0) { p = i; break; }
            if (p < 0) throw validation_error("degenerate trace form");
            if (p != col) {
                for (int j = 0; j < d; j++) swap(M.at(col, j), M.at(p, j));
                det = -det;
            }
            det *= M.at(col, col);
            Rat inv = 1 / M.at(col, col);
            for (int i = col + 1; i < d; i++) {
                if (M.at(i, col) == 0) continue;
                Rat f = M.at(i, col) * inv;
                for (int j = col; j < d; j++) M.at(i, j) -= f * M.at(col, j);
            }
        }
        if (!is_integer(det) || det <= 0)
            throw validation_error("discriminant of the basis is not a positive integer");
        disc_ = det.get_num();
    }

    roots_ = real_roots(min_poly_);
    if (int(roots_.size()) != d) throw validation_error("expected degree-many real roots");
    emb_.assign(size_t(d), std::vector<double>(static_cast<size_t>(d), 0.0));
    for (int l = 0; l < d; l++)
        for (int j = 0; j < d; j++) {
            double v = 0, x = roots_[size_t(l)];
            for (int i = d - 1; i >= 0; i--) v = v * x + to_double(basis_.at(j, i));
            emb_[size_t(l)][size_t(j)] = v;
        }

    // (det A)^2 = D_K within embedding precision.
    {
        std::vector<std::vector<double>> A = emb_;
        double det = 1;
        for (int c = 0; c < d; c++) {
            int piv = c;
            for (int i = c + 1; i < d; i++)
                if (std::abs(A[size_t(i)][size_t(c)]) > std::abs(A[size_t(piv)][size_t(c)])) piv = i;
            if (piv != c) {
                std::swap(A[size_t(c)], A[size_t(piv)]);
                det = -det;
            }
            det *= A[size_t(c)][size_t(c)];
            for (int i = c + 1; i < d; i++) {
                double f = A[size_t(i)][size_t(c)] / A[size_t(c)][size_t(c)];
                for (int j = c; j < d; j++) A[size_t(i)][size_t(j)] -= f * A[size_t(c)][size_t(j)];
            }
        }
        double rel = std::abs(det * det - disc_.get_d()) / disc_.get_d();
        if (rel > 1e-6)
            throw validation_error("embedding determinant does not square to the discriminant");
    }
}

void NumberField::validate_galois_and_index() {
    const int d = d_;
    if (int(galois_.size()) != d)
        throw validation_error("Galois group must have order equal to the degree");

    // Integrality and automorphism checks.
    for (size_t t = 0; t < galois_.size(); t++) {
        const QMat& M = galois_[t];
        if (M.rows() != d || M.cols() != d)
            throw validation_error("Galois matrix has wrong shape");
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++)
                if (!is_integer(M.at(i, j)))
                    throw validation_error("Galois matrix is not integral on the integral basis");
        // tau(1) = 1
        std::vector<Rat> e1(static_cast<size_t>(d));
        e1[0] = 1;
        if (M.mul_vec(e1) != e1)
            throw validation_error("Galois matrix does not fix 1");
    }

    auto mul_elems = [&](const std::vector<Rat>& a, const std::vector<Rat>& b) {
        std::vector<Rat> c(static_cast<size_t>(d));
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++) {
                if (a[size_t(i)] == 0 || b[size_t(j)] == 0) continue;
                Rat f = a[size_t(i)] * b[size_t(j)];
                for (int k = 0; k < d; k++) {
                    const Int& s = struct_const(i, j, k);
                    if (s != 0) c[size_t(k)] += f * Rat(s);
                }
            }
        return c;
    };

    for (const QMat& M : galois_) {
        for (int i = 0; i < d; i++)
            for (int j = i; j < d; j++) {
                std::vector<Rat> wi(static_cast<size_t>(d)), wj(static_cast<size_t>(d));
                wi[size_t(i)] = 1;
                wj[size_t(j)] = 1;
                auto lhs = M.mul_vec(mul_elems(wi, wj));
                auto rhs = mul_elems(M.mul_vec(wi), M.mul_vec(wj));
                if (lhs != rhs)
                    throw validation_error("Galois matrix is not a ring automorphism (fails at w" +
                                           std::to_string(i + 1) + "*w" + std::to_string(j + 1) + ")");
            }
    }

    // Group structure: closure, identity, inverses.
    id_index_ = -1;
    QMat idm = QMat::identity(d);
    for (size_t t = 0; t < galois_.size(); t++)
        if (galois_[t] == idm) id_index_ = int(t);
    if (id_index_ < 0) throw validation_error("Galois set does not contain the identity");

    comp_.assign(galois_.size(), std::vector<int>(galois_.size(), -1));
    for (size_t s = 0; s < galois_.size(); s++)
        for (size_t t = 0; t < galois_.size(); t++) {
            QMat st = galois_[s].mul(galois_[t]);
            for (size_t u = 0; u < galois_.size(); u++)
                if (st == galois_[u]) comp_[s][t] = int(u);
            if (comp_[s][t] < 0)
                throw validation_error("Galois matrices are not closed under composition");
        }
    inv_.assign(galois_.size(), -1);
    for (size_t s = 0; s < galois_.size(); s++) {
        for (size_t t = 0; t < galois_.size(); t++)
            if (comp_[s][t] == id_index_) inv_[s] = int(t);
        if (inv_[s] < 0) throw validation_error("Galois matrix without inverse in the set");
    }

    // l_tau: rho_{l_tau} o tau = rho_l, detected on the embedding rows.
    ltau_.assign(galois_.size(), std::vector<int>(size_t(d), -1));
    for (size_t t = 0; t < galois_.size(); t++) {
        // row m of (A * M_t) equals rho_m o tau on coordinates
        std::vector<std::vector<double>> AM(size_t(d), std::vector<double>(size_t(d), 0.0));
        for (int m = 0; m < d; m++)
            for (int j = 0; j < d; j++) {
                double v = 0;
                for (int k = 0; k < d; k++)
                    v += emb_[size_t(m)][size_t(k)] * to_double(galois_[t].at(k, j));
                AM[size_t(m)][size_t(j)] = v;
            }
        for (int l = 0; l < d; l++) {
            int found = -1;
            for (int m = 0; m < d; m++) {
                double diff = 0;
                for (int j = 0; j < d; j++)
                    diff = std::max(diff, std::abs(AM[size_t(m)][size_t(j)] - emb_[size_t(l)][size_t(j)]));
                if (diff < 1e-7) {
                    if (found >= 0)
                        throw validation_error("ambiguous embedding permutation for a Galois element");
                    found = m;
                }
            }
            if (found < 0)
                throw validation_error("Galois matrix does not permute the real embeddings");
            ltau_[t][size_t(l)] = found;
        }
    }
}

std::optional<FieldElement> NumberField::fundamental_unit() const {
    if (d_ != 2) return std::nullopt;
    // Smallest unit > 1 by brute force over the second coordinate.
    for (long b = 1; b <= 2000000; b++) {
        for (long s : {-1L, 1L}) {
            // Solve |N(a*w1 + b*w2)| = 1 for integer a by scanning the two
            // real candidates of the quadratic in a.
            // N(a + b w2) = (a + b t)(a + b t') with t,t' the embeddings of w2.
            double t1 = emb_[0][1], t2 = emb_[1][1];
            // a^2 + ab(t1+t2) + b^2 t1 t2 = s has roots:
            double B = double(b) * (t1 + t2), C = double(b) * double(b) * t1 * t2 - double(s);
            double disc = B * B - 4 * C;
            if (disc < 0) continue;
            for (double root : {(-B + std::sqrt(disc)) / 2, (-B - std::sqrt(disc)) / 2}) {
                for (long a = long(std::floor(root)) - 1; a <= long(std::floor(root)) + 2; a++) {
                    std::vector<Rat> c{Rat(a), Rat(b)};
                    FieldElement u = element(c);
                    Rat n = u.norm();
                    if (n != 1 && n != -1) continue;
                    // Normalize among {±u, ±u^-1} to the associate that is
                    // > 1 under the embedding at the largest root.
                    if (u.embed(d_ - 1) < 0) u = -u;
                    if (u.embed(d_ - 1) < 1) {
                        u = u.inverse();
                        if (u.embed(d_ - 1) < 0) u = -u;
                    }
                    if (u.embed(d_ - 1) > 1) return u;
                }
            }
        }
    }
    return std::nullopt;
}

FieldElement NumberField::parse_element(const std::string& s) const {
    std::vector<Rat> coords(static_cast<size_t>(d_));
    std::string t;
    for (char c : s)
        if (!isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) throw invalid_input("empty element string");

    size_t pos = 0;
    while (pos < t.size()) {
        int sign = 1;
        while (pos < t.size() && (t[pos] == '+' || t[pos] == '-')) {
            if (t[pos] == '-') sign = -sign;
            pos++;
        }
        size_t end = pos;
        while (end < t.size() && t[end] != '+' && t[end] != '-') end++;
        std::string term = t.substr(pos, end - pos);
        pos = end;
        if (term.empty()) throw invalid_input("malformed element string: '" + s + "'");

        Rat coeff(1);
        int widx = 0;
        size_t wp = term.find('w');
        if (wp == std::string::npos) {
            coeff = parse_rat(term);
        } else {
            std::string cpart = term.substr(0, wp);
            if (!cpart.empty()) {
                if (cpart.back() == '*') cpart.pop_back();
                if (!cpart.empty()) coeff = parse_rat(cpart);
            }
            std::string ipart = term.substr(wp + 1);
            try {
                widx = std::stoi(ipart) - 1;
            } catch (...) {
                throw invalid_input("malformed basis index in '" + term + "'");
            }
            if (widx < 0 || widx >= d_)
                throw invalid_input("basis index out of range in '" + term + "'");
        }
        coords[size_t(widx)] += Rat(sign) * coeff;
    }
    return element(std::move(coords));
}

}  // namespace gqf
