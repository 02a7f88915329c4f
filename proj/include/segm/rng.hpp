#pragma once

#include <segm/types.hpp>

#include <cstdint>
#include <random>
#include <span>

namespace segm {

// SplitMix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for substream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/**
 * Reproducible random stream: std::mt19937_64 (fixed by the C++ standard)
 * with hand-written transforms. The standard distribution classes are
 * implementation-defined, so none of them are used here.
 *
 *   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
 *   normal()   = Box-Muller on (1 - uniform(), uniform()); both variates
 *                are used, cosine branch first
 *   below(m)   = rejection sampling on the top bits, unbiased
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal();

    // Uniform integer in [0, m).
    Index below(Index m);

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates from the back.
    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(static_cast<Index>(i)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace segm
