#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hsi {

// Seeded generator with portable transforms. The engine is fully specified
// by the standard; the distributions below are written out so that a seed
// reproduces the same stream with any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Standard normal (Box-Muller, one cached value).
    double normal();
    // Uniform integer in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// SplitMix64 finalizer, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace hsi
