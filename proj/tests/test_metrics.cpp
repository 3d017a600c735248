#include "rotsim/channel.hpp"
#include "rotsim/constellation.hpp"
#include "rotsim/metrics.hpp"
#include "rotsim/montecarlo.hpp"
#include "rotsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rotsim;

namespace {

MetricsReport random_report(Stream& rng)
{
    MetricsReport r;
    r.bits_per_symbol = 6;
    r.n_blocks = 1 + rng.index(1000);
    r.n_symbols = 2 * r.n_blocks;
    r.n_bits = 6 * r.n_symbols;
    r.block_errors = rng.index(static_cast<std::uint32_t>(r.n_blocks));
    r.symbol_errors = r.block_errors;
    r.bit_errors = r.block_errors * 2;
    for (int k = 0; k < 50; ++k) {
        r.add_penalty(rng.uniform() * 3.0);
    }
    return r;
}

}  // namespace

TEST_CASE("metrics: hard counting on a hand-made block")
{
    const auto q = Constellation::square_qam(16);
    MetricsReport r;
    const std::vector<std::uint32_t> truth{0, 5};
    const std::vector<std::uint32_t> hat{0, 6};  // 0101 vs 0110
    accumulate_hard(truth, hat, q, r);
    accumulate_hard(truth, truth, q, r);
    CHECK(r.n_blocks == 2);
    CHECK(r.block_errors == 1);
    CHECK(r.symbol_errors == 1);
    CHECK(r.bit_errors == 2);
    CHECK(r.bler() == doctest::Approx(0.5));
    CHECK(r.ser() == doctest::Approx(0.25));
    CHECK(r.ber() == doctest::Approx(2.0 / 16.0));
    CHECK(r.bler_stderr() == doctest::Approx(std::sqrt(0.25 / 2.0)));
}

TEST_CASE("metrics: merge is exact, associative and commutative")
{
    Stream rng(3);
    const auto a = random_report(rng);
    const auto b = random_report(rng);
    const auto c = random_report(rng);
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
    CHECK(merge(a, b) == merge(b, a));
    const auto abc = merge(merge(a, b), c);
    CHECK(abc.n_blocks == a.n_blocks + b.n_blocks + c.n_blocks);
    CHECK(abc.soft_symbols == 150);
}

TEST_CASE("metrics: AIR from LLRs")
{
    // Uninformative LLRs: every bit costs one full bit.
    const std::vector<double> zero(8, 0.0);
    const std::vector<std::uint8_t> bits{0, 1, 1, 0, 1, 1, 0, 0};
    CHECK(air_from_llrs(zero, bits, 2) == doctest::Approx(0.0).scale(1.0));
    // Perfect confident LLRs: the full rate.
    std::vector<double> sure(8);
    for (std::size_t i = 0; i < 8; ++i) {
        sure[i] = bits[i] ? 40.0 : -40.0;
    }
    CHECK(air_from_llrs(sure, bits, 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bit_penalty(0.0, 1) == doctest::Approx(1.0));
    CHECK(bit_penalty(-1000.0, 1) == doctest::Approx(1000.0 / std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("metrics: QPSK AWGN AIR matches numerical integration")
{
    // Each QPSK bit is BPSK with amplitude a and real noise variance N0/2:
    // I = 1 - E[log2(1 + exp(-4 a (a + z) / N0))].
    const double snr_db = 3.0;
    const double n0 = snr_to_n0(snr_db);
    const double a = 1.0 / std::sqrt(2.0);
    const double sd = std::sqrt(n0 / 2.0);
    double penalty = 0.0;
    const int steps = 20000;
    const double dz = 16.0 * sd / steps;
    for (int k = 0; k <= steps; ++k) {
        const double z = -8.0 * sd + k * dz;
        const double pdf = std::exp(-z * z / (2 * sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi));
        penalty += pdf * std::log2(1.0 + std::exp(-4.0 * a * (a + z) / n0)) * dz;
    }
    const double expected = 2.0 * (1.0 - penalty);

    PlanPoint p;
    p.channels = 2;
    p.qam = 4;
    p.snr_db = snr_db;
    p.sigma2_p = 0.0;
    p.min_symbols = 200'000;
    const auto r = run_point(p, 5, EngineOptions{});
    CHECK(std::abs(r.air() - expected) < 4.0 * r.air_stderr());
    CHECK(std::abs(r.air() - expected) < 0.05);
}

TEST_CASE("metrics: relative report")
{
    MetricsReport rot;
    rot.bits_per_symbol = 6;
    rot.n_blocks = 100;
    rot.block_errors = 13;
    rot.n_symbols = 200;
    rot.n_bits = 1200;
    MetricsReport ref = rot;
    ref.block_errors = 20;
    rot.add_penalty(6.0 - 4.04);
    ref.add_penalty(6.0 - 4.00);
    const auto rel = relative_report(rot, ref);
    REQUIRE(rel.bler);
    CHECK(*rel.bler == doctest::Approx(0.65));
    CHECK_FALSE(rel.ser);  // 0 / 0
    REQUIRE(rel.air);
    CHECK(*rel.air == doctest::Approx(0.04).epsilon(1e-6));
}
