#pragma once

#include <cmath>
#include <cstdint>

namespace cpd {

// SplitMix64 finalizer (Stafford variant 13, the reference splitmix64 mixer).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// Derives an independent stream seed from (master, stream). Documented so the
// streams can be reproduced from another language: the formula is
//   mix64(master + mix64(stream + 0xD1B54A32D192ED03)).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master + mix64(stream + 0xD1B54A32D192ED03ULL));
}

// Counter-style SplitMix64 generator: state advances by the golden-ratio
// increment, each output is mix64(state). Normal variates use Box-Muller on
// consecutive uniforms (the sine mate is cached), Poisson variates use
// Knuth's product method on rate chunks of at most 30.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform on [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] keeps the log finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Unbiased-enough integer in [0, n) via the multiply-shift mapping.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    std::uint64_t poisson(double rate) {
        std::uint64_t total = 0;
        while (rate > 0.0) {
            double chunk = rate > 30.0 ? 30.0 : rate;
            rate -= chunk;
            double limit = std::exp(-chunk);
            double prod = 1.0;
            std::uint64_t k = 0;
            do {
                ++k;
                prod *= uniform01();
            } while (prod > limit);
            total += k - 1;
        }
        return total;
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace cpd
