#ifndef GQF_DESCENT_HPP
#define GQF_DESCENT_HPP

#include "gqf/form.hpp"

namespace gqf {

// The descended system: d rational quadratic forms in dn variables with
// F(X) = sum_p w_p Q_p(U) exactly. Variable order is k-major: coordinate
// (k, i) of U sits at index k*n + i, and X_i = sum_k U_{k,i} w_{k+1}.
struct DescendedSystem {
    FieldPtr field;
    int n = 0;
    std::vector<QMat> forms;  // d symmetric dn x dn matrices; Q_p(u) = u^T M_p u
    std::vector<Int> shift;   // empty (homogeneous) or the d coordinates of N

    int dim() const { return field->degree() * n; }
    Rat eval_form(int p, const std::vector<Int>& u) const;
    Rat eval_form(int p, const std::vector<Rat>& u) const;
    bool operator==(const DescendedSystem& o) const {
        return n == o.n && forms == o.forms && shift == o.shift;
    }
};

DescendedSystem descend(const GQF& F);

// Inverse of the descent map. The input matrices must be symmetric with the
// declared variable convention; dimension mismatches are invalid-input.
GQF lift(const DescendedSystem& S);

DescendedSystem shift_system(const DescendedSystem& S, const FieldElement& N);

// The block matrix W with x^(l) = sum_k w_k^(l) u_k; |det W| = D_K^(n/2).
std::vector<std::vector<double>> w_matrix(const FieldPtr& K, int n);

// Coordinate transport o^n <-> Z^(dn) (exact; x must be integral).
std::vector<Int> transport_to_z(const std::vector<FieldElement>& x);
std::vector<FieldElement> transport_to_o(const FieldPtr& K, int n, const std::vector<Int>& u);

// Clears denominators: scale * M_p and scale * N_p as integer data, for the
// exact integer counting kernels.
struct IntegerSystem {
    std::vector<ZMat> forms;
    std::vector<Int> shift;  // scaled shifts (zero vector when homogeneous)
    Int scale = 1;
};
IntegerSystem integerize(const DescendedSystem& S);

}  // namespace gqf

#endif
