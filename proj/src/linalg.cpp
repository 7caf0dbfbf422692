#include "gqf/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace gqf {

Rat parse_rat(const std::string& s) {
    if (s.empty()) throw invalid_input("empty rational literal");
    try {
        Rat q(s);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw invalid_input("malformed rational literal: '" + s + "'");
    }
}

std::string rat_to_string(const Rat& q) { return q.get_str(); }

ZMat ZMat::identity(int n) {
    ZMat m(n, n);
    for (int i = 0; i < n; i++) m.at(i, i) = 1;
    return m;
}

ZMat ZMat::mul(const ZMat& o) const {
    ZMat out(r_, o.c_);
    for (int i = 0; i < r_; i++)
        for (int k = 0; k < c_; k++) {
            const Int& v = at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < o.c_; j++) out.at(i, j) += v * o.at(k, j);
        }
    return out;
}

ZMat ZMat::transpose() const {
    ZMat out(c_, r_);
    for (int i = 0; i < r_; i++)
        for (int j = 0; j < c_; j++) out.at(j, i) = at(i, j);
    return out;
}

std::vector<Int> ZMat::mul_vec(const std::vector<Int>& v) const {
    std::vector<Int> out(r_);
    for (int i = 0; i < r_; i++)
        for (int j = 0; j < c_; j++) out[i] += at(i, j) * v[j];
    return out;
}

ZMat ZMat::hcat(const ZMat& A, const ZMat& B) {
    ZMat out(A.rows(), A.cols() + B.cols());
    for (int i = 0; i < A.rows(); i++) {
        for (int j = 0; j < A.cols(); j++) out.at(i, j) = A.at(i, j);
        for (int j = 0; j < B.cols(); j++) out.at(i, A.cols() + j) = B.at(i, j);
    }
    return out;
}

QMat QMat::identity(int n) {
    QMat m(n, n);
    for (int i = 0; i < n; i++) m.at(i, i) = 1;
    return m;
}

QMat QMat::from_int(const ZMat& m) {
    QMat out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); i++)
        for (int j = 0; j < m.cols(); j++) out.at(i, j) = Rat(m.at(i, j));
    return out;
}

QMat QMat::mul(const QMat& o) const {
    QMat out(r_, o.c_);
    for (int i = 0; i < r_; i++)
        for (int k = 0; k < c_; k++) {
            const Rat& v = at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < o.c_; j++) out.at(i, j) += v * o.at(k, j);
        }
    return out;
}

QMat QMat::transpose() const {
    QMat out(c_, r_);
    for (int i = 0; i < r_; i++)
        for (int j = 0; j < c_; j++) out.at(j, i) = at(i, j);
    return out;
}

std::vector<Rat> QMat::mul_vec(const std::vector<Rat>& v) const {
    std::vector<Rat> out(r_);
    for (int i = 0; i < r_; i++)
        for (int j = 0; j < c_; j++) out[i] += at(i, j) * v[j];
    return out;
}

namespace {

// Column operations working on a vector of columns.
using Col = std::vector<Int>;

void col_axpy(Col& dst, const Int& q, const Col& src) {
    for (size_t i = 0; i < dst.size(); i++) dst[i] -= q * src[i];
}

int last_nonzero_row(const Col& c) {
    for (int i = int(c.size()) - 1; i >= 0; i--)
        if (c[size_t(i)] != 0) return i;
    return -1;
}

// Shared HNF driver. Reduces the columns of M (optionally tracking the
// same operations on a trailing identity block to expose kernel combos).
// Pivot of a column is its lowest nonzero row; elimination proceeds
// bottom row up so the result is upper triangular.
struct HnfResult {
    std::vector<Col> pivots;   // pivot columns ordered by pivot row
    std::vector<int> pivot_row;
    std::vector<Col> track_kernel;  // tracked combos for zero columns
};

HnfResult hnf_engine(const ZMat& M, bool track) {
    const int n = M.rows(), k = M.cols();
    std::vector<Col> cols(k), trk(k);
    for (int j = 0; j < k; j++) {
        cols[j].resize(n);
        for (int i = 0; i < n; i++) cols[j][i] = M.at(i, j);
        if (track) {
            trk[j].assign(k, 0);
            trk[j][j] = 1;
        }
    }

    HnfResult res;
    std::vector<int> active(k);
    for (int j = 0; j < k; j++) active[j] = j;

    for (int row = n - 1; row >= 0; row--) {
        // Gather active columns with pivot at this row.
        std::vector<int> here;
        for (int idx : active)
            if (last_nonzero_row(cols[idx]) == row) here.push_back(idx);
        if (here.empty()) continue;

        // Euclidean reduction until one nonzero entry remains at `row`.
        // Columns whose entry drops to zero keep their pivot above this
        // row and stay active.
        while (here.size() > 1) {
            std::sort(here.begin(), here.end(), [&](int a, int b) {
                return cmp(abs(cols[size_t(a)][size_t(row)]), abs(cols[size_t(b)][size_t(row)])) < 0;
            });
            int small = here[0];
            std::vector<int> next{small};
            for (size_t t = 1; t < here.size(); t++) {
                int j = here[t];
                Int q = fdiv(cols[size_t(j)][size_t(row)], cols[size_t(small)][size_t(row)]);
                if (q != 0) {
                    col_axpy(cols[size_t(j)], q, cols[size_t(small)]);
                    if (track) col_axpy(trk[size_t(j)], q, trk[size_t(small)]);
                }
                if (cols[size_t(j)][size_t(row)] != 0) next.push_back(j);
            }
            here = next;
        }

        int piv = here[0];
        if (cols[size_t(piv)][size_t(row)] < 0) {
            for (auto& v : cols[size_t(piv)]) v = -v;
            if (track)
                for (auto& v : trk[size_t(piv)]) v = -v;
        }
        res.pivots.push_back(cols[size_t(piv)]);
        res.pivot_row.push_back(row);
        active.erase(std::remove(active.begin(), active.end(), piv), active.end());
    }

    if (track) {
        // Everything still active reduced to the zero column: kernel combos.
        for (int idx : active) {
            if (last_nonzero_row(cols[size_t(idx)]) == -1)
                res.track_kernel.push_back(trk[size_t(idx)]);
        }
    }
    return res;
}

}  // namespace

ZMat hnf_cols(const ZMat& M) {
    HnfResult r = hnf_engine(M, false);
    const int n = M.rows();
    int k = int(r.pivots.size());
    // pivot rows were collected in decreasing order; reverse for ascending.
    std::vector<int> order(k);
    for (int j = 0; j < k; j++) order[j] = k - 1 - j;

    ZMat H(n, k);
    for (int j = 0; j < k; j++) {
        const Col& c = r.pivots[size_t(order[j])];
        for (int i = 0; i < n; i++) H.at(i, j) = c[i];
    }
    // Reduce entries to the right of each pivot into [0, pivot), walking
    // pivots bottom-up so later reductions never disturb earlier ones.
    for (int j = k - 1; j >= 0; j--) {
        int prow = r.pivot_row[size_t(order[size_t(j)])];
        for (int j2 = j + 1; j2 < k; j2++) {
            Int q = fdiv(H.at(prow, j2), H.at(prow, j));
            if (q == 0) continue;
            for (int i = 0; i <= prow; i++) H.at(i, j2) -= q * H.at(i, j);
        }
    }
    return H;
}

ZMat kernel_cols(const ZMat& M) {
    HnfResult r = hnf_engine(M, true);
    int k = M.cols();
    int nk = int(r.track_kernel.size());
    ZMat K(k, nk);
    for (int j = 0; j < nk; j++)
        for (int i = 0; i < k; i++) K.at(i, j) = r.track_kernel[size_t(j)][size_t(i)];
    return K;
}

Int det_upper(const ZMat& H) {
    if (H.rows() != H.cols()) throw invalid_input("det_upper: not square");
    Int d = 1;
    for (int i = 0; i < H.rows(); i++) d *= H.at(i, i);
    return d;
}

Int det_bareiss(ZMat M) {
    const int n = M.rows();
    if (n != M.cols()) throw invalid_input("det_bareiss: not square");
    if (n == 0) return 1;
    Int prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; k++) {
        if (M.at(k, k) == 0) {
            int p = -1;
            for (int i = k + 1; i < n; i++)
                if (M.at(i, k) != 0) { p = i; break; }
            if (p < 0) return 0;
            for (int j = 0; j < n; j++) swap(M.at(k, j), M.at(p, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; i++)
            for (int j = k + 1; j < n; j++) {
                Int t = M.at(i, j) * M.at(k, k) - M.at(i, k) * M.at(k, j);
                M.at(i, j) = t / prev;  // exact by Bareiss
            }
        prev = M.at(k, k);
    }
    return sign > 0 ? M.at(n - 1, n - 1) : -M.at(n - 1, n - 1);
}

std::optional<std::vector<Int>> solve_hnf(const ZMat& H, std::vector<Int> v) {
    const int k = H.cols();
    std::vector<Int> x(static_cast<size_t>(k));
    for (int j = k - 1; j >= 0; j--) {
        int prow = -1;
        for (int i = H.rows() - 1; i >= 0; i--)
            if (H.at(i, j) != 0) { prow = i; break; }
        if (prow < 0) throw invalid_input("solve_hnf: zero column in HNF");
        Int r = fmod(v[size_t(prow)], H.at(prow, j));
        if (r != 0) return std::nullopt;
        x[size_t(j)] = v[size_t(prow)] / H.at(prow, j);
        if (x[size_t(j)] != 0)
            for (int i = 0; i <= prow; i++) v[size_t(i)] -= x[size_t(j)] * H.at(i, j);
    }
    for (const Int& r : v)
        if (r != 0) return std::nullopt;
    return x;
}

std::vector<Int> reduce_mod_hnf(const ZMat& H, std::vector<Int> v) {
    for (int j = H.cols() - 1; j >= 0; j--) {
        Int q = fdiv(v[size_t(j)], H.at(j, j));
        if (q != 0)
            for (int i = 0; i <= j; i++) v[size_t(i)] -= q * H.at(i, j);
    }
    return v;
}

int rank_bareiss(ZMat M) {
    const int n = M.rows(), m = M.cols();
    Int prev = 1;
    int row = 0;
    for (int col = 0; col < m && row < n; col++) {
        int p = -1;
        for (int i = row; i < n; i++)
            if (M.at(i, col) != 0) { p = i; break; }
        if (p < 0) continue;
        if (p != row)
            for (int j = 0; j < m; j++) swap(M.at(row, j), M.at(p, j));
        for (int i = row + 1; i < n; i++)
            for (int j = col + 1; j < m; j++) {
                Int t = M.at(i, j) * M.at(row, col) - M.at(i, col) * M.at(row, j);
                M.at(i, j) = t / prev;
            }
        for (int i = row + 1; i < n; i++) M.at(i, col) = 0;
        prev = M.at(row, col);
        row++;
    }
    return row;
}

namespace {

// Row echelon with partial pivoting by nonzero test; returns pivot columns
// and transforms b alongside when provided.
int echelon(QMat& M, std::vector<Rat>* b, std::vector<int>* pivot_cols) {
    const int n = M.rows(), m = M.cols();
    int row = 0;
    for (int col = 0; col < m && row < n; col++) {
        int p = -1;
        for (int i = row; i < n; i++)
            if (M.at(i, col) != 0) { p = i; break; }
        if (p < 0) continue;
        if (p != row) {
            for (int j = 0; j < m; j++) swap(M.at(row, j), M.at(p, j));
            if (b) swap((*b)[size_t(row)], (*b)[size_t(p)]);
        }
        Rat inv = 1 / M.at(row, col);
        for (int j = col; j < m; j++) M.at(row, j) *= inv;
        if (b) (*b)[size_t(row)] *= inv;
        for (int i = 0; i < n; i++) {
            if (i == row || M.at(i, col) == 0) continue;
            Rat f = M.at(i, col);
            for (int j = col; j < m; j++) M.at(i, j) -= f * M.at(row, j);
            if (b) (*b)[size_t(i)] -= f * (*b)[size_t(row)];
        }
        if (pivot_cols) pivot_cols->push_back(col);
        row++;
    }
    return row;
}

}  // namespace

QMat inverse(const QMat& M) {
    const int n = M.rows();
    if (n != M.cols()) throw invalid_input("inverse: not square");
    QMat aug(n, 2 * n);
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) aug.at(i, j) = M.at(i, j);
        aug.at(i, n + i) = 1;
    }
    std::vector<int> piv;
    int r = echelon(aug, nullptr, &piv);
    if (r < n || piv[size_t(n) - 1] >= n) throw invalid_input("inverse: singular matrix");
    QMat out(n, n);
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) out.at(i, j) = aug.at(i, n + j);
    return out;
}

std::optional<std::vector<Rat>> solve(QMat M, std::vector<Rat> b) {
    const int n = M.rows(), m = M.cols();
    std::vector<int> piv;
    echelon(M, &b, &piv);
    // Consistency: zero rows must have zero rhs.
    for (int i = int(piv.size()); i < n; i++)
        if (b[size_t(i)] != 0) return std::nullopt;
    std::vector<Rat> x(static_cast<size_t>(m));
    for (size_t r = 0; r < piv.size(); r++) x[size_t(piv[r])] = b[r];
    return x;
}

QMat kernel(QMat M) {
    const int m = M.cols();
    std::vector<int> piv;
    echelon(M, nullptr, &piv);
    std::vector<bool> is_piv(size_t(m), false);
    for (int c : piv) is_piv[size_t(c)] = true;
    std::vector<int> free_cols;
    for (int j = 0; j < m; j++)
        if (!is_piv[size_t(j)]) free_cols.push_back(j);
    QMat K(m, int(free_cols.size()));
    for (size_t fj = 0; fj < free_cols.size(); fj++) {
        int f = free_cols[fj];
        K.at(f, int(fj)) = 1;
        for (size_t r = 0; r < piv.size(); r++) K.at(piv[r], int(fj)) = -M.at(int(r), f);
    }
    return K;
}

int rank(QMat M) {
    return echelon(M, nullptr, nullptr);
}

QSolver::QSolver(QMat M) : n_(M.rows()), lu_(std::move(M)) {
    if (lu_.rows() != lu_.cols()) throw invalid_input("QSolver: not square");
    perm_.resize(size_t(n_));
    for (int i = 0; i < n_; i++) perm_[size_t(i)] = i;
    for (int col = 0; col < n_; col++) {
        int p = -1;
        for (int i = col; i < n_; i++)
            if (lu_.at(i, col) != 0) { p = i; break; }
        if (p < 0) {
            singular_ = true;
            return;
        }
        if (p != col) {
            for (int j = 0; j < n_; j++) swap(lu_.at(col, j), lu_.at(p, j));
            std::swap(perm_[size_t(col)], perm_[size_t(p)]);
        }
        Rat inv = 1 / lu_.at(col, col);
        for (int i = col + 1; i < n_; i++) {
            if (lu_.at(i, col) == 0) continue;
            Rat f = lu_.at(i, col) * inv;
            lu_.at(i, col) = f;  // store multiplier
            for (int j = col + 1; j < n_; j++) lu_.at(i, j) -= f * lu_.at(col, j);
        }
    }
}

std::vector<Rat> QSolver::solve(std::vector<Rat> b) const {
    if (singular_) throw invalid_input("QSolver: singular system");
    std::vector<Rat> pb(static_cast<size_t>(n_));
    for (int i = 0; i < n_; i++) pb[size_t(i)] = b[size_t(perm_[size_t(i)])];
    // forward
    for (int i = 1; i < n_; i++)
        for (int j = 0; j < i; j++)
            if (lu_.at(i, j) != 0) pb[size_t(i)] -= lu_.at(i, j) * pb[size_t(j)];
    // back
    for (int i = n_ - 1; i >= 0; i--) {
        for (int j = i + 1; j < n_; j++)
            if (lu_.at(i, j) != 0) pb[size_t(i)] -= lu_.at(i, j) * pb[size_t(j)];
        pb[size_t(i)] /= lu_.at(i, i);
    }
    return pb;
}

}  // namespace gqf
