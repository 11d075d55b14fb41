#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace dnacnn {

/// Seedable generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the C++ standard.
/// The standard distributions are implementation-defined, so the mappings to
/// uniform reals, bounded integers and categorical draws are done here:
///   uniform()      = (next() >> 11) * 2^-53, a double in [0, 1)
///   below(n)       = rejection sampling on next() against the largest multiple of n
///   categorical(p) = first index whose cumulative probability exceeds uniform()
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    /// Index drawn with the given probabilities; the last positive entry absorbs rounding.
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last_positive = i;
            cumulative += probs[i];
            if (u < cumulative) return i;
        }
        return last_positive;
    }

    /// Independent child stream, derived deterministically from this seed and a tag.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        // splitmix64 finalizer
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dnacnn
