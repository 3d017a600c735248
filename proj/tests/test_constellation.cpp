#include "rotsim/channel.hpp"
#include "rotsim/constellation.hpp"
#include "rotsim/rng.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

using namespace rotsim;

TEST_CASE("qam: unit energy, Gray neighbours, label round trip")
{
    for (unsigned m : {4U, 16U, 64U, 256U}) {
        const auto q = Constellation::square_qam(m);
        double e = 0.0;
        for (auto p : q.points()) {
            e += std::norm(p);
        }
        CHECK(e / m == doctest::Approx(1.0).epsilon(1e-12));
        // Horizontally or vertically adjacent points differ in one bit.
        double d = 1e9;
        for (std::uint32_t a = 1; a < m; ++a) {
            d = std::min(d, std::abs(q.point(a) - q.point(0)));
        }
        for (std::uint32_t a = 0; a < m; ++a) {
            for (std::uint32_t b = a + 1; b < m; ++b) {
                if (std::abs(std::abs(q.point(a) - q.point(b)) - d) < 1e-9) {
                    CHECK(std::popcount(a ^ b) == 1);
                }
            }
            CHECK(q.map_bits(q.demap_symbol(a)) == a);
        }
    }
}

TEST_CASE("qam: QPSK label 00 sits in the first quadrant")
{
    const auto q = Constellation::square_qam(4);
    const std::vector<std::uint8_t> zero{0, 0};
    const cplx p = q.point(q.map_bits(zero));
    CHECK(p.real() > 0.0);
    CHECK(p.imag() > 0.0);
    CHECK(q.label_string(q.map_bits(zero)) == "00");
}

TEST_CASE("qam: slicer agrees with exhaustive nearest point")
{
    Stream rng(8);
    for (unsigned m : {4U, 64U, 256U}) {
        const auto q = Constellation::square_qam(m);
        for (int t = 0; t < 5000; ++t) {
            const cplx y = rng.complex_normal(1.5);
            const double scale = 0.5 + rng.uniform();
            CHECK(q.slice(y, scale) == q.nearest(y, scale));
        }
        // A midpoint between two levels goes to the lower label.
        const double mid = 0.5 * (q.axis_levels()[0] + q.axis_levels()[1]);
        CHECK(q.slice({mid, mid}) == q.nearest({mid, mid}));
    }
    CHECK_THROWS(Constellation::square_qam(8));
}

TEST_CASE("channel: snr conversion")
{
    CHECK(snr_to_n0(0.0) == doctest::Approx(1.0));
    CHECK(snr_to_n0(20.0) == doctest::Approx(0.01));
    CHECK(snr_to_n0(10.0, 2.0) == doctest::Approx(0.2));
    CHECK(asymptotic_alpha(0.02) == doctest::Approx(std::exp(-0.01)));
}

TEST_CASE("channel: phase and noise statistics")
{
    const ChannelParams p{4, 1.0, 0.05, 0.02};
    const PhaseNoiseChannel ch(p);
    Stream phase(1), noise(2);
    const std::size_t n = 4;
    std::vector<cplx> tx(n, cplx{0.0, 0.0});
    std::vector<cplx> rx(n), w(n);
    std::vector<double> theta(n);
    const int blocks = 50000;
    double t2 = 0.0;
    double t01 = 0.0;
    double w2 = 0.0;
    cplx wpseudo = 0.0;
    for (int b = 0; b < blocks; ++b) {
        ch.apply(tx, phase, noise, rx, theta, w);
        t2 += theta[0] * theta[0];
        t01 += theta[0] * theta[1];  // channels draw independent phases
        for (std::size_t i = 0; i < n; ++i) {
            w2 += std::norm(w[i]);
            wpseudo += w[i] * w[i];
            CHECK(std::abs(rx[i] - w[i]) < 1e-15);
        }
    }
    CHECK(t2 / blocks == doctest::Approx(0.02).epsilon(0.03));
    CHECK(std::abs(t01 / blocks) < 4.0 * 0.02 / std::sqrt(blocks));
    CHECK(w2 / (blocks * n) == doctest::Approx(0.05).epsilon(0.02));
    CHECK(std::abs(wpseudo) / (blocks * n) < 0.002);
}

TEST_CASE("channel: asymptotic surrogate parameters")
{
    const ChannelParams p{64, 1.0, 0.01, 0.1};
    const double a = std::exp(-0.05);
    CHECK(asymptotic_alpha(0.1) == doctest::Approx(a));
    CHECK(asymptotic_noise_variance(p) == doctest::Approx(0.01 + 1.0 - a * a));
    const AsymptoticChannel ch(p);
    CHECK(ch.alpha() == doctest::Approx(a));
    CHECK_THROWS(ChannelParams({0, 1.0, 0.1, 0.0}).validate());
    CHECK_THROWS(ChannelParams({2, 1.0, 0.0, 0.0}).validate());
    CHECK_THROWS(ChannelParams({2, 1.0, 0.1, -1.0}).validate());
}
