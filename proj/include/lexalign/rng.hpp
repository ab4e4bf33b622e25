#ifndef LEXALIGN_RNG_HPP
#define LEXALIGN_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace lexalign {

/// splitmix64 finalizer; used to derive independent per-fold stream seeds
/// so results do not depend on execution order.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform integer in [0, n) by rejection; avoids std::uniform_int_distribution
/// so that sequences are identical across standard-library implementations.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

/// k distinct indices drawn uniformly without replacement from [0, d),
/// returned in ascending order.
inline std::vector<int> sample_indices(std::mt19937_64& rng, int d, int k) {
    std::vector<int> pool(d);
    for (int i = 0; i < d; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(d - i)));
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
}

}

#endif
