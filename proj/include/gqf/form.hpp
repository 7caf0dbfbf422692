#ifndef GQF_FORM_HPP
#define GQF_FORM_HPP

#include <optional>

#include "gqf/number_field.hpp"

namespace gqf {

// Generalised quadratic form: symmetric coefficient tensor c_{i,j,tau,tau'}
// over K, acting on variables and their Galois conjugates. Coefficients are
// rational field elements in general (the descent bijection lives on the
// rational tensor space); the arithmetic modules require integral ones.
class GQF {
  public:
    GQF() = default;
    // entries must satisfy c(i,ti,j,tj) = c(j,tj,i,ti); throws otherwise.
    static GQF from_coeffs(FieldPtr field, int n, std::vector<FieldElement> dense);

    const FieldPtr& field() const { return field_; }
    int vars() const { return n_; }
    int gal() const { return g_; }

    const FieldElement& coeff(int i, int ti, int j, int tj) const {
        return c_[idx(i, ti, j, tj)];
    }

    bool is_integral() const;
    bool is_zero() const;

    // Automorphism indices that actually appear (identity always included,
    // making the G-invariant ideal well defined for the zero form too).
    const std::vector<int>& g_set() const { return gset_; }

    FieldElement evaluate(const std::vector<FieldElement>& x) const;
    FieldElement bilinear(const std::vector<FieldElement>& x,
                          const std::vector<FieldElement>& y) const;

    GQF operator+(const GQF& o) const;
    GQF scaled(const Rat& f) const;
    bool operator==(const GQF& o) const;

    size_t idx(int i, int ti, int j, int tj) const {
        return ((size_t(i) * g_ + size_t(ti)) * n_ + size_t(j)) * g_ + size_t(tj);
    }

  private:
    FieldPtr field_;
    int n_ = 0, g_ = 0;
    std::vector<FieldElement> c_;
    std::vector<int> gset_;
};

// Q(X_1..X_n) + R(X_1^tau..X_m^tau) with symmetric integral matrices.
// B is the n x n matrix whose upper-left m x m block is R and zero outside.
struct SpecialShape {
    FieldPtr field;
    int n = 0, m = 0;
    int tau = -1;                     // fixed non-trivial automorphism index
    std::vector<FieldElement> A;      // n*n symmetric
    std::vector<FieldElement> R;      // m*m symmetric

    const FieldElement& a(int i, int j) const { return A[size_t(i) * n + size_t(j)]; }
    const FieldElement& r(int i, int j) const { return R[size_t(i) * m + size_t(j)]; }
    GQF to_gqf() const;
};

// Constructors. make_special validates the determinant conditions of the
// shape hypotheses; build a SpecialShape directly to probe degenerate data.
GQF make_special(const SpecialShape& s);
GQF make_diagonal(const std::vector<FieldElement>& a, const std::vector<FieldElement>& b,
                  int tau);
GQF make_partial_trace(const FieldPtr& field, const std::vector<int>& H, int n);

struct DiagonalShape {
    std::vector<FieldElement> a;
    std::vector<FieldElement> b;
    int tau = -1;
};
// Recognizes a diagonal special-shape tensor (used by the dual form and the
// fast counting paths).
std::optional<DiagonalShape> as_diagonal(const GQF& F);

// Determinant of a symmetric matrix of field elements (exact K-arithmetic).
FieldElement k_matrix_det(const FieldPtr& K, const std::vector<FieldElement>& M, int n);

// The embedded system: d real symmetric dn x dn matrices with
// rho_l(F(x)) = x^T M_l x under the block coordinates x^(1),..,x^(d)
// (block b holds rho_b of each variable; flattening index = b*n + i).
std::vector<std::vector<double>> embedded_system(const GQF& F);

// Dual form of a diagonal F, integral by construction.
GQF dual_form(const GQF& F);

enum class Verdict { yes, no, unknown };

struct AdmissibilityResult {
    Verdict verdict = Verdict::unknown;
    std::vector<std::vector<FieldElement>> witnesses;  // the v_i for "yes"
};
AdmissibilityResult is_admissible(const GQF& F, int draws = 20, uint64_t seed = 1);

// Rank over K of the nd x nd coefficient matrix.
int coeff_rank(const GQF& F);

struct PencilReport {
    int l = 0;
    std::vector<double> det_poly;  // coefficients of det(A^(l) + t B^(l_tau))
    int degree = 0;
    bool degree_ok = false;        // degree >= m-1
    Verdict rank_ok = Verdict::unknown;  // rank >= n-1 at all real t
    std::vector<double> suspicious_t;    // real roots of the determinant polynomial
};

struct AssumptionReport {
    FieldElement det_A;
    FieldElement det_R_block;
    bool det_conditions_ok = false;      // Assumption on determinants
    std::vector<PencilReport> pencils;   // one per embedding
    bool degree_condition_ok = false;    // all pencils
    Verdict rank_condition = Verdict::unknown;
    int jacobian_probe_rank = 0;         // randomized codimension probe
    bool codimension_probe_ok = false;   // heuristic only
};

AssumptionReport check_assumptions(const SpecialShape& s, uint64_t seed = 1);

}  // namespace gqf

#endif
