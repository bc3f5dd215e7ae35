#ifndef VPPSCHED_RNG_HPP
#define VPPSCHED_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace vppsched {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream `stream` under `master`. Streams do not depend on each other.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi)
{
    if (!(hi > lo))
        return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0)
{
    return std::normal_distribution<double>(mean, stddev)(rng);
}

template<typename T>
const T& pick(Rng& rng, std::span<const T> items)
{
    return items[uniform_index(rng, items.size())];
}

} // namespace vppsched

#endif
