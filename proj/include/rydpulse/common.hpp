#pragma once

// Shared conventions for the whole library:
//  - hbar = 1, all rates in units of the Rabi frequency Omega_0, times as
//    dimensionless Omega_0*t, interactions as V/(hbar*Omega_0).
//  - Atoms are 0-indexed. A computational basis state b is a bitmask with bit
//    i = 1 when atom i starts in |1> (bit i = 0 -> atom i is |0> and inert).
//  - Bitstrings in text I/O are printed atom-0-first ("011" = atoms 1,2 in |1>).

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rydpulse {

// Misconfiguration: bad parameters, files, preconditions. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure (integrator breakdown etc). CLI exit code 3.
struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// A search that finished without any admissible result. CLI exit code 4.
struct NoSolutionError : std::runtime_error {
    explicit NoSolutionError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64: the library's only PRNG. Restart k of a campaign with seed s
// draws from splitmix64 initialized with state s + k; uniform doubles use the
// top 53 bits. Fully specified so results are bit-reproducible everywhere.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// FNV-1a 64-bit, used for config hashes and data-file checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}
inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline int popcount32(std::uint32_t x) { return std::popcount(x); }

constexpr double pi = 3.14159265358979323846;

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace rydpulse
