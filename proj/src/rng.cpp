#include "rotsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace rotsim {

std::uint64_t StreamKey::seed() const noexcept
{
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ point_id);
    h = mix64(h ^ shard_id);
    h = mix64(h ^ static_cast<std::uint64_t>(tag));
    return h;
}

double Stream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint32_t Stream::index(std::uint32_t n)
{
    std::uint64_t x = engine_() >> 32;
    std::uint64_t m = x * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
        const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
        while (low < threshold) {
            x = engine_() >> 32;
            m = x * n;
            low = static_cast<std::uint32_t>(m);
        }
    }
    return static_cast<std::uint32_t>(m >> 32);
}

double Stream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::complex<double> Stream::complex_normal(double variance)
{
    const double sd = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {sd * re, sd * im};
}

}  // namespace rotsim
