#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace causalsem {

// Seeded random source with platform-independent draws.
//
// std::mt19937_64 is fully specified by the standard, but the std::*_distribution
// adaptors are not, so bounded integers, reals and shuffles are derived here from
// raw engine output. That keeps generated datasets byte-identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    // Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) { shuffle(std::span<T>(items)); }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent per-index seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace causalsem
