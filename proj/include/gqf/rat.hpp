#ifndef GQF_RAT_HPP
#define GQF_RAT_HPP

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace gqf {

using Int = mpz_class;
using Rat = mpq_class;

// Error hierarchy. The CLI maps invalid_input/validation_error to exit
// code 2 and budget_exceeded/search_exhausted to exit code 3.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_input : error {
    using error::error;
};
struct validation_error : error {
    using error::error;
};
struct budget_exceeded : error {
    using error::error;
};
struct search_exhausted : error {
    using error::error;
};
struct unsupported_prime : error {
    using error::error;
};

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

// mpq_class(n, d) does not canonicalize; this does.
inline Rat frac(long n, long d) {
    Rat q(n, d);
    q.canonicalize();
    return q;
}

// Parses "p/q" or "p"; throws invalid_input on malformed text.
Rat parse_rat(const std::string& s);
std::string rat_to_string(const Rat& q);

// Floor division and canonical nonnegative remainder for mpz.
inline Int fdiv(const Int& a, const Int& b) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}
inline Int fmod(const Int& a, const Int& b) {
    Int r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

inline double to_double(const Rat& q) { return q.get_d(); }

}  // namespace gqf

#endif
