#ifndef SUBRIE_RANDOM_HPP
#define SUBRIE_RANDOM_HPP

#include <cstdint>
#include <random>

namespace subrie {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for sub-task `index` of a run seeded with `seed`; the result does not
/// depend on how sub-tasks are scheduled.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t index)
{
    return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x51ed27e1ULL)));
}

}  // namespace subrie

#endif  // SUBRIE_RANDOM_HPP
