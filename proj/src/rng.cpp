#include <segm/rng.hpp>

#include <cmath>
#include <numbers>

namespace segm {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

Index Rng::below(Index m) {
    require(m > 0, "Rng::below needs a positive bound");
    auto bound = static_cast<std::uint64_t>(m);
    // Largest multiple of bound that fits; reject above it.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return static_cast<Index>(x % bound);
}

}  // namespace segm
