#ifndef FALSIFY_RNG_HPP
#define FALSIFY_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace falsify {

// All randomness in the project flows through this engine. The raw
// mt19937_64 stream is specified bit-exactly by the standard; the value
// transforms below are our own so that results do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + uniform01() * (hi - lo);
    }

    // uniform integer in [0, n), n >= 1 (Lemire multiply-shift)
    std::uint64_t uniform_int(std::uint64_t n) {
        const unsigned __int128 wide =
            static_cast<unsigned __int128>(engine_()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    // standard normal via Box-Muller; consumes two draws per value
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
};

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent child seed from a master seed and a stream name,
// so components (space sampling, policy init, exploration, ...) can be
// reseeded or perturbed without disturbing each other.
constexpr std::uint64_t substream_seed(std::uint64_t master,
                                       std::string_view stream) {
    return detail::splitmix64(master ^ detail::fnv1a(stream));
}

}  // namespace falsify

#endif
