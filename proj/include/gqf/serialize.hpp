#ifndef GQF_SERIALIZE_HPP
#define GQF_SERIALIZE_HPP

#include <json.hpp>

#include "gqf/counting.hpp"
#include "gqf/densities.hpp"
#include "gqf/descent.hpp"
#include "gqf/expsums.hpp"
#include "gqf/form.hpp"

namespace gqf {

using Json = nlohmann::ordered_json;

// Field description file: {degree, min_poly, basis, galois}; rationals are
// "p/q" strings, galois entries either root-index permutations or
// coordinate matrices. "Qsqrt:D" is the built-in real quadratic.
FieldPtr field_from_json(const Json& j);
FieldPtr load_field(const std::string& spec_or_path);

// GQF file: {n, coeffs: [{i, j, tau, tau', value}]} with 1-based variable
// indices and 1-based galois indices into the field's automorphism list,
// or the diagonal shorthand {a: [...], b: [...], tau}. Values are
// coordinate arrays of rational strings (plain strings parse as element
// expressions like "1+1*w2").
GQF form_from_json(const FieldPtr& K, const Json& j);
Json form_to_json(const GQF& F);
// "a=1,1;b=1" / "a=1+1*w2,2;b=3;tau=2" command-line shorthand, or a path.
GQF load_form(const FieldPtr& K, const std::string& spec_or_path);

Json system_to_json(const DescendedSystem& S);
DescendedSystem system_from_json(const FieldPtr& K, const Json& j);

Json ideal_to_json(const Ideal& a);

Json density_report_to_json(const MainTerm& mt);
Json assumption_report_to_json(const AssumptionReport& rep);

// Report envelope: config echoed verbatim, library version, seed, wall time
// (the only nondeterministic field).
Json report_envelope(const std::string& command, const Json& config, uint64_t seed,
                     double wall_ms, Json result);

extern const char* kVersion;

}  // namespace gqf

#endif
