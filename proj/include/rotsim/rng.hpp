#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace rotsim {

// Independent randomness sources inside one simulation shard. The numeric
// values are part of the stream-derivation contract and must not change.
enum class SourceTag : std::uint64_t {
    data = 1,
    phase = 2,
    noise = 3,
    design = 4,
    candidates = 5,
    rotation = 6,
};

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Coordinates of a substream: (master seed, point stream id, shard id,
// source). Two different keys give unrelated engine seeds.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t point_id = 0;
    std::uint64_t shard_id = 0;
    SourceTag tag = SourceTag::data;

    [[nodiscard]] std::uint64_t seed() const noexcept;
};

/// Seeded random stream with portable variate generation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform, index, and Gaussian variates are computed here rather
/// than with the <random> distributions, whose algorithms are left to the
/// library implementation; that keeps every draw reproducible across
/// toolchains.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    explicit Stream(const StreamKey& key) : Stream(key.seed()) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer on [0, n), unbiased (Lemire's multiply-and-reject).
    std::uint32_t index(std::uint32_t n);

    // Standard normal variate (Box-Muller, pairs cached).
    double normal();

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rotsim
