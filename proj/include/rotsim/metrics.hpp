#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace rotsim {

class Constellation;

__extension__ typedef __int128 int128;

/// Error counters and AIR sums for one simulated point (or a part of one).
///
/// Every field is an integer, so merging partial reports is exact,
/// associative and commutative: any split of the same draws gives the same
/// totals. The per-symbol AIR penalty sum_k log2(1 + e^{-(2b-1)L}) is
/// accumulated in fixed point with `air_fraction_bits` fractional bits.
struct MetricsReport {
    static constexpr int air_fraction_bits = 32;

    unsigned bits_per_symbol = 0;
    std::uint64_t seed = 0;

    std::uint64_t n_blocks = 0;
    std::uint64_t n_symbols = 0;
    std::uint64_t n_bits = 0;
    std::uint64_t block_errors = 0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t bit_errors = 0;

    std::uint64_t soft_symbols = 0;
    int128 penalty_sum = 0;
    int128 penalty_sq_sum = 0;

    [[nodiscard]] double bler() const;
    [[nodiscard]] double ser() const;
    [[nodiscard]] double ber() const;
    // Bits per complex symbol; NaN if no soft outputs were accumulated.
    [[nodiscard]] double air() const;

    // Binomial standard errors of the rates, sample standard error of AIR.
    [[nodiscard]] double bler_stderr() const;
    [[nodiscard]] double ser_stderr() const;
    [[nodiscard]] double ber_stderr() const;
    [[nodiscard]] double air_stderr() const;

    // Adds the per-symbol AIR penalty (bits) of one symbol.
    void add_penalty(double penalty_bits);

    MetricsReport& merge(const MetricsReport& other);

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport merge(MetricsReport a, const MetricsReport& b);

// One block of N channel decisions. A block error is any symbol error;
// bit errors are popcounts of the label XOR.
void accumulate_hard(std::span<const std::uint32_t> s_true, std::span<const std::uint32_t> s_hat,
                     const Constellation& constellation, MetricsReport& report);

// log2(1 + exp(-(2b - 1) L)) for a natural-log LLR L and true bit b.
double bit_penalty(double llr, unsigned bit);

// Adds every symbol of `llrs` (m LLRs per symbol, aligned with `bits`).
void accumulate_soft(std::span<const double> llrs, std::span<const std::uint8_t> bits,
                     unsigned bits_per_symbol, MetricsReport& report);

// m - (1 / n_sym) sum over bits of log2(1 + exp(-(2b - 1) L)).
double air_from_llrs(std::span<const double> llrs, std::span<const std::uint8_t> bits,
                     unsigned bits_per_symbol);

/// Rotated relative to unrotated: ratios for error rates, difference for AIR.
/// A ratio whose baseline is zero, or any undefined input, is empty.
struct RelativeMetrics {
    std::optional<double> bler;
    std::optional<double> ser;
    std::optional<double> ber;
    std::optional<double> air;
};

RelativeMetrics relative_report(const MetricsReport& rotated, const MetricsReport& unrotated);

}  // namespace rotsim
