#ifndef GQF_NUMBER_FIELD_HPP
#define GQF_NUMBER_FIELD_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gqf/linalg.hpp"
#include "gqf/rat.hpp"

namespace gqf {

class NumberField;
using FieldPtr = std::shared_ptr<const NumberField>;

// Element of K as exact rational coordinates over the integral basis.
class FieldElement {
  public:
    FieldElement() = default;
    FieldElement(FieldPtr field, std::vector<Rat> coords);

    const FieldPtr& field() const { return field_; }
    const std::vector<Rat>& coords() const { return coords_; }
    const Rat& coord(int j) const { return coords_[size_t(j)]; }

    bool is_zero() const;
    bool is_integral() const;
    // Smallest positive integer t with t*x integral.
    Int denominator() const;

    FieldElement operator+(const FieldElement& o) const;
    FieldElement operator-(const FieldElement& o) const;
    FieldElement operator-() const;
    FieldElement operator*(const FieldElement& o) const;
    FieldElement scaled(const Rat& c) const;
    bool operator==(const FieldElement& o) const;
    bool operator!=(const FieldElement& o) const { return !(*this == o); }

    Rat trace() const;   // exact: trace of the multiplication matrix
    Rat norm() const;    // exact: determinant of the multiplication matrix
    FieldElement galois(int t) const;
    FieldElement inverse() const;  // throws invalid_input on zero
    double embed(int l) const;     // real embedding rho_l (1-based l not used; 0-based)

    QMat mult_matrix() const;  // y |-> x*y on basis coordinates

    std::string to_string() const;  // "3 + 1*w2" style

  private:
    void check_same_field(const FieldElement& o) const;
    FieldPtr field_;
    std::vector<Rat> coords_;
};

// Input record for the general constructor.
struct FieldDesc {
    std::vector<Int> min_poly;                 // ascending, monic (leading 1 may be present or omitted)
    std::vector<std::vector<Rat>> basis;       // basis[j] = coords of w_{j+1} in powers of theta
    std::vector<std::vector<int>> galois_perms;  // optional: root-index permutations (0-based)
    std::vector<QMat> galois_mats;               // optional: coordinate matrices
    int embed_precision_bits = 53;             // working precision knob for root refinement
};

// Totally real Galois number field: integral basis, structure constants,
// Galois matrices, real embeddings. Immutable after construction; all
// operations on it are pure.
class NumberField : public std::enable_shared_from_this<NumberField> {
  public:
    static FieldPtr real_quadratic(const Int& D);
    static FieldPtr from_description(const FieldDesc& desc);

    int degree() const { return d_; }
    const std::vector<Int>& min_poly() const { return min_poly_; }  // ascending incl. leading 1
    const QMat& basis_in_powers() const { return basis_; }
    const std::vector<QMat>& galois() const { return galois_; }
    int galois_count() const { return int(galois_.size()); }
    int galois_identity() const { return id_index_; }
    // Index of the inverse automorphism.
    int galois_inverse(int t) const { return inv_[size_t(t)]; }
    int galois_compose(int s, int t) const { return comp_[size_t(s)][size_t(t)]; }  // s after t

    const Int& discriminant() const { return disc_; }
    const QMat& trace_gram() const { return gram_; }
    double embedding(int l, int j) const { return emb_[size_t(l)][size_t(j)]; }  // rho_l(w_{j+1})
    double root(int l) const { return roots_[size_t(l)]; }

    // l_tau of eq (l_tau): the unique index with rho_{l_tau} o tau = rho_l.
    int l_tau(int t, int l) const { return ltau_[size_t(t)][size_t(l)]; }

    // struct constant c_{ijk}: w_i*w_j = sum_k c_{ijk} w_k (all integers).
    const Int& struct_const(int i, int j, int k) const {
        return struct_[(size_t(i) * d_ + size_t(j)) * d_ + size_t(k)];
    }

    FieldElement element(std::vector<Rat> coords) const;
    FieldElement from_rat(const Rat& q) const;       // q * w1
    FieldElement zero() const { return from_rat(0); }
    FieldElement one() const { return from_rat(1); }
    FieldElement basis_element(int j) const;         // w_{j+1}

    std::vector<FieldElement> dual_basis() const;    // Tr(rho_i w_j) = delta_ij
    Rat basis_trace(int j) const { return gram_.at(0, j); }  // Tr(w_{j+1}) since w1 = 1

    // Fundamental unit (> 1) for real quadratic fields; bounded coordinate
    // search elsewhere. Used to balance generators under the embeddings.
    std::optional<FieldElement> fundamental_unit() const;

    // Structural equality (same basis, poly, Galois set).
    bool same_field(const NumberField& o) const;

    // Parses "3+1*w2-1/2*w3" over this field's integral basis.
    FieldElement parse_element(const std::string& s) const;

  private:
    NumberField() = default;
    void finish_construction();  // struct consts, gram, embeddings, validation
    void validate_galois_and_index();

    int d_ = 0;
    std::vector<Int> min_poly_;
    QMat basis_;
    QMat basis_inv_;
    std::vector<QMat> galois_;
    int id_index_ = 0;
    std::vector<int> inv_;
    std::vector<std::vector<int>> comp_;
    std::vector<std::vector<int>> ltau_;
    Int disc_;
    QMat gram_;
    QMat gram_inv_;
    std::vector<Int> struct_;
    std::vector<double> roots_;
    std::vector<std::vector<double>> emb_;
};

// Real roots of a monic integer polynomial, certified count via Sturm
// chains, refined by bisection + Newton. Exposed for tests.
std::vector<double> real_roots(const std::vector<Int>& monic_poly_ascending);

}  // namespace gqf

#endif
