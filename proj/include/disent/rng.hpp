#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "disent/errors.hpp"
#include "disent/normal.hpp"

namespace disent {

// splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Stable 64-bit seed for a named task under a master seed. Identical
// (master, id) pairs map to identical seeds on every platform and run.
inline std::uint64_t task_seed(std::uint64_t master, std::string_view task_id) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a over the id bytes
    for (unsigned char ch : task_id) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return mix64(mix64(master) ^ h);
}

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; distributions are hand-rolled because the std:: ones are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    // Uniform integer in [0, n). Lemire's bias-free bounded sampling.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw argument_error("uniform_int: n must be positive");
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    int uniform_index(int n) { return static_cast<int>(uniform_int(static_cast<std::uint64_t>(n))); }

    // Standard normal by quantile inversion of a (0,1) uniform.
    double normal() { return normal_quantile(uniform()); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

} // namespace disent
