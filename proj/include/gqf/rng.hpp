#ifndef GQF_RNG_HPP
#define GQF_RNG_HPP

#include <cstdint>
#include <random>

namespace gqf {

// Deterministic seeded stream: (seed, stream) -> an mt19937_64 engine keyed
// by a splitmix64 scramble. mt19937_64's output sequence is fixed by the
// standard, so reports reproduce bit for bit across platforms and thread
// counts; shard s of a run always uses Rng(seed, s).
class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) : eng_(scramble(seed, stream)) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1), 53-bit mantissa.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    long next_int(long lo, long hi) {  // inclusive bounds
        return lo + long(next_below(uint64_t(hi - lo + 1)));
    }

  private:
    static uint64_t scramble(uint64_t seed, uint64_t stream) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (2 * stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::mt19937_64 eng_;
};

}  // namespace gqf

#endif
