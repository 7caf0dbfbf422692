#ifndef GQF_LINALG_HPP
#define GQF_LINALG_HPP

#include <optional>
#include <vector>

#include "gqf/rat.hpp"

namespace gqf {

// Dense matrices over mpz / mpq, row-major. Sizes here are desk scale
// (d <= 8, dn <= 64, descent maps a few hundred), so the implementations
// favour exactness and clarity over asymptotics.

class ZMat {
  public:
    ZMat() = default;
    ZMat(int rows, int cols) : r_(rows), c_(cols), a_(size_t(rows) * cols) {}
    static ZMat identity(int n);

    int rows() const { return r_; }
    int cols() const { return c_; }
    Int& at(int i, int j) { return a_[size_t(i) * c_ + j]; }
    const Int& at(int i, int j) const { return a_[size_t(i) * c_ + j]; }

    ZMat mul(const ZMat& o) const;
    ZMat transpose() const;
    std::vector<Int> mul_vec(const std::vector<Int>& v) const;
    bool operator==(const ZMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

    // Concatenate columns [A | B]; row counts must agree.
    static ZMat hcat(const ZMat& A, const ZMat& B);

  private:
    int r_ = 0, c_ = 0;
    std::vector<Int> a_;
};

class QMat {
  public:
    QMat() = default;
    QMat(int rows, int cols) : r_(rows), c_(cols), a_(size_t(rows) * cols) {}
    static QMat identity(int n);
    static QMat from_int(const ZMat& m);

    int rows() const { return r_; }
    int cols() const { return c_; }
    Rat& at(int i, int j) { return a_[size_t(i) * c_ + j]; }
    const Rat& at(int i, int j) const { return a_[size_t(i) * c_ + j]; }

    QMat mul(const QMat& o) const;
    QMat transpose() const;
    std::vector<Rat> mul_vec(const std::vector<Rat>& v) const;
    bool operator==(const QMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

  private:
    int r_ = 0, c_ = 0;
    std::vector<Rat> a_;
};

// Canonical column-style Hermite normal form of the lattice spanned by the
// columns of M: upper triangular after dropping zero columns, pivots
// positive, entries right of a pivot reduced into [0, pivot). Full-rank
// square input yields the unique canonical basis used as the equality
// certificate for ideals and H-lattices.
ZMat hnf_cols(const ZMat& M);

// Basis (as columns) of the integer kernel {x : Mx = 0}.
ZMat kernel_cols(const ZMat& M);

// Determinant of an upper-triangular column HNF.
Int det_upper(const ZMat& H);

// Exact determinant of a square integer matrix (fraction-free).
Int det_bareiss(ZMat M);

// Solves Hx = v over the integers for H a full-rank column HNF
// (upper triangular). Returns nullopt if v is not in the column lattice.
std::optional<std::vector<Int>> solve_hnf(const ZMat& H, std::vector<Int> v);

// Reduces v into the fundamental box of the column HNF H: the returned
// representative has 0 <= r_i < H(i,i).
std::vector<Int> reduce_mod_hnf(const ZMat& H, std::vector<Int> v);

// Rank of an integer matrix by fraction-free (Bareiss) elimination.
int rank_bareiss(ZMat M);

// Gauss-Jordan over the rationals.
QMat inverse(const QMat& M);                       // throws invalid_input if singular
std::optional<std::vector<Rat>> solve(QMat M, std::vector<Rat> b);
QMat kernel(QMat M);                               // kernel basis as columns
int rank(QMat M);

// LU-style solver reused across many right-hand sides (the descent map
// cache): row-echelon factorisation retaining the elimination record.
class QSolver {
  public:
    explicit QSolver(QMat M);  // square
    bool singular() const { return singular_; }
    std::vector<Rat> solve(std::vector<Rat> b) const;  // throws if singular

  private:
    int n_ = 0;
    bool singular_ = false;
    QMat lu_;
    std::vector<int> perm_;
};

}  // namespace gqf

#endif
