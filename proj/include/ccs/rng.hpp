#pragma once

#include <cmath>
#include <cstdint>

#include "ccs/error.hpp"

namespace ccs {

namespace detail {

// splitmix64 finalizer; full-period bijective mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Combine a seed with a stream index into a new seed. Used everywhere a
// derived, order-independent random stream is needed (per tree, per model,
// per epoch). mix_seed(s, a) != mix_seed(s, b) for a != b in practice.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix64(seed ^ detail::mix64(stream + 0x632be59bd9b4e019ULL));
}

// Counter-based 64-bit generator. The key never mutates, so split() children
// are independent of how much of the parent stream has been consumed.
// No global state; callers own their instance.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // Uniform on [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) {
            throw InvalidArgument("uniform: lo must be < hi, got [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + ")");
        }
        return lo + (hi - lo) * next_double();
    }

    // Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - next_double(); // (0, 1], keeps log finite
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Integer in [0, n). n must be > 0. Modulo bias is negligible for n << 2^64.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Child stream derived from the original key; order-independent.
    Rng split(std::uint64_t stream) const { return Rng(mix_seed(key_, stream)); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ccs
