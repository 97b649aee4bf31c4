#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace pulse {

// 64-bit FNV-1a, used to derive per-component seeds from a master seed.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Every random stream in the project is seeded as mix(master, name), so any
// sub-experiment can be reproduced in isolation from the master seed alone.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view component) {
    return splitmix64(master ^ fnv1a64(component));
}

// Seedable generator with explicit inverse-CDF sampling. The standard
// distributions are implementation-defined; these are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t master, std::string_view component)
        : engine_(derive_seed(master, component)) {}

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inverse-CDF draw; strictly positive with probability one.
    double exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be > 0");
        return -std::log1p(-uniform()) / rate;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace pulse
