#pragma once
/**
 * @file rng.hpp
 * @brief Counter-based random numbers for reproducible parallel Monte Carlo.
 *
 * Algorithm: Philox4x32-10 (Salmon et al., SC 2011) keyed by the 64-bit seed;
 * the path index selects the high counter words, so every path owns a
 * substream that can be regenerated independently of ordering or worker
 * count. Normals come from Box-Muller on the 64-bit uniforms. Streams are
 * portable: the algorithm names above fully determine every draw.
 */

#include <cmath>
#include <cstdint>

namespace fmsde {

class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr2_(static_cast<std::uint32_t>(stream)),
          ctr3_(static_cast<std::uint32_t>(stream >> 32)) {}

    /// Next 64 uniform bits.
    std::uint64_t next_u64() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        ++block_;
        std::uint32_t x0 = c0, x1 = c1, x2 = ctr2_, x3 = ctr3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * x0;
            std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * x2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t y0 = hi1 ^ x1 ^ k0;
            std::uint32_t y1 = lo1;
            std::uint32_t y2 = hi0 ^ x3 ^ k1;
            std::uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += kW0;
            k1 += kW1;
        }
        std::uint64_t lo = (static_cast<std::uint64_t>(x1) << 32) | x0;
        spare_ = (static_cast<std::uint64_t>(x3) << 32) | x2;
        have_ = true;
        return lo;
    }

    /// Uniform in (0,1].
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double next_normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    std::uint32_t key0_, key1_, ctr2_, ctr3_;
    std::uint64_t block_ = 0;
    std::uint64_t spare_ = 0;
    bool have_ = false;
    double spare_normal_ = 0.0;
    bool have_normal_ = false;
};

/// Name recorded in report headers so streams can be reproduced elsewhere.
inline const char* rng_algorithm_name() { return "philox4x32-10+box-muller"; }

}  // namespace fmsde
