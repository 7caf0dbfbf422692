#ifndef GQF_DENSITIES_HPP
#define GQF_DENSITIES_HPP

#include "gqf/descent.hpp"
#include "gqf/form.hpp"
#include "gqf/ideal.hpp"

namespace gqf {

struct DensityBudget {
    long enum_budget = 1000000000L;   // tuples for direct enumeration
    long conv_budget = 4000000000L;   // multiply-adds for histogram convolution
    long solution_probe_tries = 20000;
    // 0 = automatic; 1/2/3 force the split-CRT / group-convolution /
    // generic-enumeration path (equivalence tests).
    int force_path = 0;
};

struct LocalDensity {
    Int p;
    int l = 1;
    Int count;   // #{x mod p^l : F(x) = N}
    Rat value;   // count / p^(d l (n-1)), exact
};

// Exhaustive/convolution count of F(x) = N over (o/p^l)^n, exact.
// Throws budget_exceeded when every path is over budget.
LocalDensity local_density(const GQF& F, const FieldElement& N, const Int& p, int l,
                           const DensityBudget& budget = {});

struct PrimeDensity {
    Int p;
    int l_used = 1;
    Rat sigma;
    bool stabilized = false;        // sigma_p(l) == sigma_p(l+1) observed exactly
    bool nonsingular_found = false; // a mod-p solution with full Jacobian rank
    bool hensel_certified = false;  // singular locus on the fiber is empty mod p
    bool budget_hit = false;
};

struct SingularSeries {
    double value = 0;
    bool positive = false;
    std::vector<PrimeDensity> primes;
    double tail_sensitivity = 0;  // relative change when truncating at p_max/2
    bool obstructed = false;      // some sigma_p = 0
};

SingularSeries singular_series(const GQF& F, const FieldElement& N, long p_max, int l_max,
                               const DensityBudget& budget = {});

struct RealPoint {
    bool found = false;
    std::vector<double> xi;
    double residual = 0;
    double min_jacobian_sv = 0;  // smallest singular value of the d x dn Jacobian
    int starts_used = 0;
};

// Newton search for xi with Q_l(xi) = targets_l and full-rank Jacobian.
RealPoint find_real_point(const DescendedSystem& S, const std::vector<double>& targets,
                          int max_starts = 64, uint64_t seed = 1);

enum class SlabWeight { indicator, smooth };

struct SlabEstimate {
    double value = 0;
    double stderr_ = 0;
    double value_half = 0;    // same samples, eps/2 (Richardson check)
    double stderr_half = 0;
    long samples = 0;
    long hits = 0;
    uint64_t seed = 0;
    double eps = 0;
    std::vector<double> box_lo, box_hi;  // effective sampling box
};

// Monte-Carlo slab estimator of the singular integral
//   sigma_inf(t) = int_{Q_l(u) = t_l} w(delta^-1 |u - xi|) du
// sampling uniformly in the weight box intersected with exact bounds from
// positive-definite diagonal constraint forms (unbiased: the slab lies
// inside the intersection). Throws on zero acceptance with guidance.
SlabEstimate singular_integral(const DescendedSystem& S, const std::vector<double>& targets,
                               const std::vector<double>& xi, double delta, double eps,
                               long samples, uint64_t seed, SlabWeight weight);

struct MainTerm {
    double constant = 0;    // c = sigma_inf(N/P^2) * S(N) / D_K^(n - 1/2)
    double stderr_ = 0;
    double predicted = 0;   // c * P^((n-2)d)
    double P = 0;
    double delta = 0;
    SingularSeries series;
    SlabEstimate integral;
    RealPoint point;
};

MainTerm main_term(const GQF& F, const FieldElement& N, double P, double delta, long p_max,
                   int l_max, long mc_samples, double eps, uint64_t seed,
                   SlabWeight weight = SlabWeight::indicator,
                   const DensityBudget& budget = {});

}  // namespace gqf

#endif
