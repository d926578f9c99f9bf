#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace bexp {

// xoshiro256** with a splitmix64 seed expansion.
//
// Rng(seed, stream) initializes the 256-bit state with four consecutive
// splitmix64 outputs, starting from
//     seed ^ mix64(stream + 0x2545F4914F6CDD1D)
// where mix64 is the splitmix64 output function. Uniform doubles use the
// top 53 bits of one output; integers below n use the high word of a
// 64x64 multiply; normals use Box-Muller with two fresh uniforms.
// Generators that produce one record per stream index are reproducible
// record by record, independent of how records are scheduled.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next(); }

    std::uint64_t next();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t below(std::size_t n);        // [0, n), n > 0
    int between(int lo, int hi);             // [lo, hi] inclusive
    double normal();

private:
    std::uint64_t s_[4];
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace bexp
