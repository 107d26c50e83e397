#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace spc::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * @brief Seed of realization @p index under @p master.
 *
 * Equal to the (index+1)-th output of a SplitMix64 generator started at
 * @p master, so distinct indices never collide for a fixed master seed.
 */
constexpr std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(master + (index + 1) * kGolden);
}

/// mt19937_64 with portable uniform and normal transforms.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; pairs are consumed in order.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace spc::rng
