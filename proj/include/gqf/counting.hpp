#ifndef GQF_COUNTING_HPP
#define GQF_COUNTING_HPP

#include "gqf/densities.hpp"
#include "gqf/descent.hpp"

namespace gqf {

// Counting region: the weight support {x : |W^-1 x / P - xi| <= delta},
// which in u-coordinates is the exact box P*(xi +- delta), optionally
// overridden by explicit integer bounds.
struct CountSpec {
    GQF F;
    FieldElement N;
    double P = 1;
    std::vector<double> xi;    // dn entries; empty = origin
    double delta = 0.25;
    SlabWeight weight = SlabWeight::indicator;
    // explicit box override (inclusive integer bounds per coordinate)
    std::vector<long> box_lo, box_hi;
    long budget = 2000000000L;
    long map_budget = 50000000L;  // split mode: value-map entries
};

struct CountResult {
    Int count;          // exact number of lattice solutions in the region
    double weighted;    // smooth-weight total (equals count for indicator)
    Int enumerated;     // box volume walked
};

// Direct enumeration of the shifted descended system over the box.
CountResult count_direct(const CountSpec& spec);

// Meet-in-the-middle counter for separable (diagonal special shape) forms
// with the indicator weight: exact, equal to count_direct where both run.
Int count_split_diagonal(const CountSpec& spec);

struct CompareRecord {
    double P = 0;
    Int count;
    double predicted = 0;
    double ratio = 0;
    double ratio_lo = 0, ratio_hi = 0;  // stderr-propagated band
};

CompareRecord compare_to_prediction(const CountSpec& spec, const MainTerm& mt);

}  // namespace gqf

#endif
