#include "causalsem/rng.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace causalsem {

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::index: empty range");
    }
    const std::uint64_t bound = n;
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return static_cast<std::size_t>(x % bound);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("Rng::uniform_int: empty range");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(index(static_cast<std::size_t>(span)));
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    if (k > n) {
        throw std::invalid_argument("Rng::sample_indices: k > n");
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates from the front.
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + index(n - i)]);
    }
    pool.resize(k);
    return pool;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace causalsem
