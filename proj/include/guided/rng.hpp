#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace guided {

/// Deterministic RNG. Distribution transforms are implemented here rather
/// than with std:: distributions so that identical seeds give identical
/// streams regardless of standard library version.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pair cached).
    double normal();

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes two seeds into one (splitmix64 finalizer); used to derive per-stage
/// and per-epoch streams from a base seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace guided
