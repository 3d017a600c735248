#include "rotsim/metrics.hpp"

#include "rotsim/constellation.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rotsim {

namespace {

constexpr double fixed_scale = 0x1.0p32;
static_assert(MetricsReport::air_fraction_bits == 32);

double rate(std::uint64_t errors, std::uint64_t trials)
{
    return trials ? static_cast<double>(errors) / static_cast<double>(trials)
                  : std::numeric_limits<double>::quiet_NaN();
}

double binomial_stderr(std::uint64_t errors, std::uint64_t trials)
{
    if (trials == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double p = rate(errors, trials);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace

double MetricsReport::bler() const { return rate(block_errors, n_blocks); }
double MetricsReport::ser() const { return rate(symbol_errors, n_symbols); }
double MetricsReport::ber() const { return rate(bit_errors, n_bits); }
double MetricsReport::bler_stderr() const { return binomial_stderr(block_errors, n_blocks); }
double MetricsReport::ser_stderr() const { return binomial_stderr(symbol_errors, n_symbols); }
double MetricsReport::ber_stderr() const { return binomial_stderr(bit_errors, n_bits); }

double MetricsReport::air() const
{
    if (soft_symbols == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double mean_penalty =
        static_cast<double>(penalty_sum) / fixed_scale / static_cast<double>(soft_symbols);
    return static_cast<double>(bits_per_symbol) - mean_penalty;
}

double MetricsReport::air_stderr() const
{
    if (soft_symbols < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto n = static_cast<double>(soft_symbols);
    // n * sum(q^2) - sum(q)^2 is exact in integers when it fits; fall back
    // to floating point otherwise.
    double centered;
    const int128 limit = (static_cast<int128>(1) << 126) / static_cast<int128>(soft_symbols);
    if (penalty_sq_sum < limit && penalty_sum < (static_cast<int128>(1) << 62)) {
        const int128 c = static_cast<int128>(soft_symbols) * penalty_sq_sum - penalty_sum * penalty_sum;
        centered = static_cast<double>(c) / (fixed_scale * fixed_scale) / n;
    } else {
        const double s = static_cast<double>(penalty_sum) / fixed_scale;
        const double s2 = static_cast<double>(penalty_sq_sum) / (fixed_scale * fixed_scale);
        centered = s2 - s * s / n;
    }
    const double variance = std::max(centered, 0.0) / (n - 1.0);
    return std::sqrt(variance / n);
}

void MetricsReport::add_penalty(double penalty_bits)
{
    const auto q = static_cast<std::int64_t>(std::llround(penalty_bits * fixed_scale));
    penalty_sum += q;
    penalty_sq_sum += static_cast<int128>(q) * q;
    ++soft_symbols;
}

MetricsReport& MetricsReport::merge(const MetricsReport& other)
{
    if (bits_per_symbol == 0) {
        bits_per_symbol = other.bits_per_symbol;
        seed = other.seed;
    } else if (other.bits_per_symbol != 0 && other.bits_per_symbol != bits_per_symbol) {
        throw std::invalid_argument("merge: reports for different constellations");
    }
    n_blocks += other.n_blocks;
    n_symbols += other.n_symbols;
    n_bits += other.n_bits;
    block_errors += other.block_errors;
    symbol_errors += other.symbol_errors;
    bit_errors += other.bit_errors;
    soft_symbols += other.soft_symbols;
    penalty_sum += other.penalty_sum;
    penalty_sq_sum += other.penalty_sq_sum;
    return *this;
}

MetricsReport merge(MetricsReport a, const MetricsReport& b)
{
    a.merge(b);
    return a;
}

void accumulate_hard(std::span<const std::uint32_t> s_true, std::span<const std::uint32_t> s_hat,
                     const Constellation& constellation, MetricsReport& report)
{
    if (s_true.size() != s_hat.size()) {
        throw std::invalid_argument("accumulate_hard: shape mismatch");
    }
    const unsigned m = constellation.bits_per_symbol();
    if (report.bits_per_symbol == 0) {
        report.bits_per_symbol = m;
    }
    std::uint64_t wrong = 0;
    for (std::size_t i = 0; i < s_true.size(); ++i) {
        const std::uint32_t diff = s_true[i] ^ s_hat[i];
        wrong += diff != 0;
        report.bit_errors += static_cast<std::uint64_t>(std::popcount(diff));
    }
    report.n_blocks += 1;
    report.block_errors += wrong != 0;
    report.n_symbols += s_true.size();
    report.symbol_errors += wrong;
    report.n_bits += s_true.size() * m;
}

double bit_penalty(double llr, unsigned bit)
{
    // log2(1 + e^x), x = -(2b - 1) L, without overflow for large x.
    const double x = bit ? -llr : llr;
    const double nats = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return nats / std::numbers::ln2;
}

void accumulate_soft(std::span<const double> llrs, std::span<const std::uint8_t> bits,
                     unsigned bits_per_symbol, MetricsReport& report)
{
    if (llrs.size() != bits.size() || bits_per_symbol == 0 || llrs.size() % bits_per_symbol != 0) {
        throw std::invalid_argument("accumulate_soft: LLRs and bits must align to whole symbols");
    }
    if (report.bits_per_symbol == 0) {
        report.bits_per_symbol = bits_per_symbol;
    }
    for (std::size_t s = 0; s < llrs.size(); s += bits_per_symbol) {
        double penalty = 0.0;
        for (unsigned k = 0; k < bits_per_symbol; ++k) {
            penalty += bit_penalty(llrs[s + k], bits[s + k]);
        }
        report.add_penalty(penalty);
    }
}

double air_from_llrs(std::span<const double> llrs, std::span<const std::uint8_t> bits,
                     unsigned bits_per_symbol)
{
    MetricsReport r;
    accumulate_soft(llrs, bits, bits_per_symbol, r);
    return r.air();
}

RelativeMetrics relative_report(const MetricsReport& rotated, const MetricsReport& unrotated)
{
    auto ratio = [](double a, double b) -> std::optional<double> {
        if (!std::isfinite(a) || !std::isfinite(b) || b == 0.0) {
            return std::nullopt;
        }
        return a / b;
    };
    RelativeMetrics out;
    out.bler = ratio(rotated.bler(), unrotated.bler());
    out.ser = ratio(rotated.ser(), unrotated.ser());
    out.ber = ratio(rotated.ber(), unrotated.ber());
    const double a = rotated.air();
    const double b = unrotated.air();
    if (std::isfinite(a) && std::isfinite(b)) {
        out.air = a - b;
    }
    return out;
}

}  // namespace rotsim
