#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace echokit {

/**
 * Seeded random source with a pinned output sequence.
 *
 * The engine is std::mt19937_64, whose sequence is fixed by the standard.
 * The standard distributions are not (their algorithms are left to the
 * library vendor), so every derived variate is computed here:
 *   - uniform01: top 53 bits of one engine draw, in [0,1)
 *   - normal:    Box-Muller on two uniform01 draws, both outputs used
 *   - below(n):  rejection sampling on the full 64-bit range
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // 1 - u keeps the log argument in (0,1].
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t draw = engine_();
        while (draw >= limit) {
            draw = engine_();
        }
        return draw % n;
    }

    /// Partial Fisher-Yates: the first `count` entries become a uniform
    /// sample without replacement, in draw order.
    template <typename T>
    void sample_prefix(std::vector<T>& items, std::size_t count) {
        const std::size_t n = items.size();
        for (std::size_t i = 0; i < count && i < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(items[i], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace echokit
