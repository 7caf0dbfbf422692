#include "gqf/descent.hpp"

#include <map>
#include <mutex>

namespace gqf {

namespace {

// Tr(rho_p w_k w_l^tau w_m^tau') for all indices, exact.
struct DescentTable {
    int d, g;
    // trace_val[p][k][l][tau][m][tau'] flattened
    std::vector<Rat> tr;
    size_t idx(int p, int k, int l, int t, int m, int t2) const {
        return ((((size_t(p) * d + size_t(k)) * d + size_t(l)) * g + size_t(t)) * d + size_t(m)) * g +
               size_t(t2);
    }
};

DescentTable build_table(const FieldPtr& K) {
    DescentTable T;
    T.d = K->degree();
    T.g = K->galois_count();
    const int d = T.d, g = T.g;
    T.tr.assign(size_t(d) * d * d * g * d * g, Rat(0));
    auto rho = K->dual_basis();
    for (int k = 0; k < d; k++)
        for (int l = 0; l < d; l++)
            for (int t = 0; t < g; t++) {
                FieldElement wl = K->basis_element(l).galois(t);
                FieldElement base = K->basis_element(k) * wl;
                for (int m = 0; m < d; m++)
                    for (int t2 = 0; t2 < g; t2++) {
                        FieldElement e = base * K->basis_element(m).galois(t2);
                        for (int p = 0; p < d; p++)
                            T.tr[T.idx(p, k, l, t, m, t2)] = (rho[size_t(p)] * e).trace();
                    }
            }
    return T;
}

const DescentTable& table_for(const FieldPtr& K) {
    static std::mutex mu;
    static std::map<const NumberField*, DescentTable> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(K.get());
    if (it == cache.end()) it = cache.emplace(K.get(), build_table(K)).first;
    return it->second;
}

}  // namespace

Rat DescendedSystem::eval_form(int p, const std::vector<Int>& u) const {
    std::vector<Rat> ur(u.size());
    for (size_t i = 0; i < u.size(); i++) ur[i] = Rat(u[i]);
    return eval_form(p, ur);
}

Rat DescendedSystem::eval_form(int p, const std::vector<Rat>& u) const {
    const QMat& M = forms[size_t(p)];
    Rat acc = 0;
    for (int i = 0; i < M.rows(); i++) {
        if (u[size_t(i)] == 0) continue;
        for (int j = 0; j < M.cols(); j++) {
            if (u[size_t(j)] == 0 || M.at(i, j) == 0) continue;
            acc += M.at(i, j) * u[size_t(i)] * u[size_t(j)];
        }
    }
    return acc;
}

DescendedSystem descend(const GQF& F) {
    const FieldPtr& K = F.field();
    const int d = K->degree(), g = K->galois_count(), n = F.vars();
    const DescentTable& T = table_for(K);

    DescendedSystem S;
    S.field = K;
    S.n = n;
    S.forms.assign(size_t(d), QMat(d * n, d * n));
    for (int i = 0; i < n; i++)
        for (int ti = 0; ti < g; ti++)
            for (int j = 0; j < n; j++)
                for (int tj = 0; tj < g; tj++) {
                    const FieldElement& c = F.coeff(i, ti, j, tj);
                    if (c.is_zero()) continue;
                    for (int k = 0; k < d; k++) {
                        const Rat& ck = c.coord(k);
                        if (ck == 0) continue;
                        for (int l = 0; l < d; l++)
                            for (int m = 0; m < d; m++) {
                                for (int p = 0; p < d; p++) {
                                    const Rat& t = T.tr[T.idx(p, k, l, ti, m, tj)];
                                    if (t != 0)
                                        S.forms[size_t(p)].at(l * n + i, m * n + j) += ck * t;
                                }
                            }
                    }
                }
    return S;
}

namespace {

struct PhiSolverKey {
    const NumberField* field;
    int n;
    bool operator<(const PhiSolverKey& o) const {
        return field != o.field ? field < o.field : n < o.n;
    }
};

// Unknowns of the lift: one coefficient vector entry per (k, a <= b) with
// a = (i, tau), b = (j, tau') flattened pair indices. Equations: one per
// (p, r <= s) with r = (l, i), s = (m, j).
struct PhiLayout {
    int d, g, n, N;  // N = n*g = n*d
    std::vector<std::pair<int, int>> pairs;  // a <= b
    std::map<std::pair<int, int>, int> pair_index;
    int unknowns() const { return int(pairs.size()) * d; }
};

PhiLayout layout_for(const FieldPtr& K, int n) {
    PhiLayout L;
    L.d = K->degree();
    L.g = K->galois_count();
    L.n = n;
    L.N = n * L.g;
    for (int a = 0; a < L.N; a++)
        for (int b = a; b < L.N; b++) {
            L.pair_index[{a, b}] = int(L.pairs.size());
            L.pairs.push_back({a, b});
        }
    return L;
}

// beta vector of a descended system in the (p, r <= s) layout.
std::vector<Rat> beta_vector(const PhiLayout& L, const DescendedSystem& S) {
    std::vector<Rat> out;
    for (int p = 0; p < L.d; p++)
        for (auto [r, s] : L.pairs) {
            // matrix entry beta_(r,s); off-diagonal coefficients appear twice
            out.push_back(S.forms[size_t(p)].at(r, s));
        }
    return out;
}

const QSolver& phi_solver(const FieldPtr& K, int n, const PhiLayout& L) {
    static std::mutex mu;
    static std::map<PhiSolverKey, std::unique_ptr<QSolver>> cache;
    std::lock_guard<std::mutex> lock(mu);
    PhiSolverKey key{K.get(), n};
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    const int g = K->galois_count();
    const int dim = L.unknowns();
    QMat Phi(dim, dim);
    // column u: basis tensor with 1 at pair (a,b) (and (b,a)), coordinate k
    int col = 0;
    for (int k = 0; k < K->degree(); k++) {
        for (auto [a, b] : L.pairs) {
            std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, K->zero());
            int i = a / g, ti = a % g, j = b / g, tj = b % g;
            std::vector<Rat> coords(static_cast<size_t>(K->degree()));
            coords[size_t(k)] = 1;
            FieldElement val = K->element(coords);
            c[((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj)] = val;
            c[((size_t(j) * g + size_t(tj)) * n + size_t(i)) * g + size_t(ti)] = val;
            GQF basisF = GQF::from_coeffs(K, n, std::move(c));
            std::vector<Rat> beta = beta_vector(L, descend(basisF));
            for (int r = 0; r < dim; r++) Phi.at(r, col) = beta[size_t(r)];
            col++;
        }
    }
    auto solver = std::make_unique<QSolver>(std::move(Phi));
    if (solver->singular())
        throw error("descent map is singular; Galois data is inconsistent");
    auto res = cache.emplace(key, std::move(solver));
    return *res.first->second;
}

}  // namespace

GQF lift(const DescendedSystem& S) {
    const FieldPtr& K = S.field;
    const int d = K->degree(), g = K->galois_count(), n = S.n;
    if (int(S.forms.size()) != d) throw invalid_input("lift: expected degree-many forms");
    for (const QMat& M : S.forms) {
        if (M.rows() != d * n || M.cols() != d * n)
            throw invalid_input("lift: form matrix has wrong dimension");
        for (int i = 0; i < M.rows(); i++)
            for (int j = i + 1; j < M.cols(); j++)
                if (M.at(i, j) != M.at(j, i)) throw invalid_input("lift: matrix not symmetric");
    }
    PhiLayout L = layout_for(K, n);
    const QSolver& solver = phi_solver(K, n, L);
    std::vector<Rat> beta = beta_vector(L, S);
    std::vector<Rat> sol = solver.solve(std::move(beta));

    std::vector<FieldElement> c(size_t(n) * g * size_t(n) * g, K->zero());
    int col = 0;
    for (int k = 0; k < d; k++) {
        for (auto [a, b] : L.pairs) {
            if (sol[size_t(col)] != 0) {
                int i = a / g, ti = a % g, j = b / g, tj = b % g;
                size_t i1 = ((size_t(i) * g + size_t(ti)) * n + size_t(j)) * g + size_t(tj);
                size_t i2 = ((size_t(j) * g + size_t(tj)) * n + size_t(i)) * g + size_t(ti);
                std::vector<Rat> coords = c[i1].is_zero()
                                              ? std::vector<Rat>(static_cast<size_t>(d))
                                              : c[i1].coords();
                coords[size_t(k)] += sol[size_t(col)];
                FieldElement val = K->element(coords);
                c[i1] = val;
                c[i2] = val;
            }
            col++;
        }
    }
    return GQF::from_coeffs(K, n, std::move(c));
}

DescendedSystem shift_system(const DescendedSystem& S, const FieldElement& N) {
    if (!N.is_integral()) throw invalid_input("shift: N must be integral");
    DescendedSystem out = S;
    out.shift.clear();
    for (int i = 0; i < S.field->degree(); i++) out.shift.push_back(N.coord(i).get_num());
    return out;
}

std::vector<std::vector<double>> w_matrix(const FieldPtr& K, int n) {
    const int d = K->degree();
    std::vector<std::vector<double>> W(size_t(d) * n, std::vector<double>(size_t(d) * n, 0.0));
    for (int l = 0; l < d; l++)
        for (int k = 0; k < d; k++)
            for (int i = 0; i < n; i++)
                W[size_t(l) * n + size_t(i)][size_t(k) * n + size_t(i)] = K->embedding(l, k);
    return W;
}

std::vector<Int> transport_to_z(const std::vector<FieldElement>& x) {
    if (x.empty()) return {};
    const FieldPtr& K = x[0].field();
    const int d = K->degree(), n = int(x.size());
    std::vector<Int> u(size_t(d) * n);
    for (int i = 0; i < n; i++) {
        if (!x[size_t(i)].is_integral())
            throw invalid_input("transport: element is not integral");
        for (int k = 0; k < d; k++) u[size_t(k) * n + size_t(i)] = x[size_t(i)].coord(k).get_num();
    }
    return u;
}

std::vector<FieldElement> transport_to_o(const FieldPtr& K, int n, const std::vector<Int>& u) {
    const int d = K->degree();
    if (int(u.size()) != d * n) throw invalid_input("transport: wrong coordinate count");
    std::vector<FieldElement> x;
    for (int i = 0; i < n; i++) {
        std::vector<Rat> c(static_cast<size_t>(d));
        for (int k = 0; k < d; k++) c[size_t(k)] = Rat(u[size_t(k) * n + size_t(i)]);
        x.push_back(K->element(std::move(c)));
    }
    return x;
}

IntegerSystem integerize(const DescendedSystem& S) {
    IntegerSystem out;
    Int den = 1;
    for (const QMat& M : S.forms)
        for (int i = 0; i < M.rows(); i++)
            for (int j = 0; j < M.cols(); j++) {
                Int l;
                mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), M.at(i, j).get_den().get_mpz_t());
                den = l;
            }
    out.scale = den;
    for (const QMat& M : S.forms) {
        ZMat Z(M.rows(), M.cols());
        for (int i = 0; i < M.rows(); i++)
            for (int j = 0; j < M.cols(); j++) {
                Rat v = M.at(i, j) * Rat(den);
                Z.at(i, j) = v.get_num();
            }
        out.forms.push_back(std::move(Z));
    }
    out.shift.assign(S.forms.size(), Int(0));
    for (size_t i = 0; i < S.shift.size(); i++) out.shift[i] = S.shift[i] * den;
    return out;
}

}  // namespace gqf
