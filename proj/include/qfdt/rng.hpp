// rng.hpp — counter-based random number generation with explicit stream splitting.
//
// Every random quantity in the toolkit is drawn from a CounterRng keyed by
// (seed, stream). Streams are cheap to derive, so each ensemble realization
// gets its own stream id and can be generated independently (and in parallel)
// with bit-identical results regardless of execution order.

#pragma once

#include <cmath>
#include <cstdint>

namespace qfdt::rng {

// SplitMix64 finalizer: bijective 64-bit mix with good avalanche.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive a child seed from (seed, stream). Used for per-realization splits.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream ^ 0xd1b54a32d192ed03ull));
}

// Stateless-by-construction counter generator: draw k is mix64(key + k*phi).
// The key is itself derived from (seed, stream).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive_stream(seed, stream)) {}

    std::uint64_t next_u64() noexcept {
        return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ull);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) noexcept {
        // 64-bit multiply-shift; bias is negligible for n << 2^64
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller (pairs cached for determinism).
    double next_gaussian() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace qfdt::rng
