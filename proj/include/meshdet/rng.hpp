#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace meshdet {

// Mixes a 64-bit value with the SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Derives a child seed from a parent seed and an ordered list of tags.
// Every random stream in the simulator is named this way, so a stream's
// contents depend only on its name and never on generation order.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags);

// xoshiro256** engine. Cheap to seed, which matters because thermal noise
// is drawn from a fresh stream per (node, frame).
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform double in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    double exponential(double rate);

private:
    std::uint64_t s_[4];
};

}  // namespace meshdet
