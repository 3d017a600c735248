#include "rotsim/channel.hpp"
#include "rotsim/constellation.hpp"
#include "rotsim/receivers.hpp"
#include "rotsim/rng.hpp"
#include "rotsim/rotations.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace rotsim;

namespace {

// Joint metric written out directly: sum_i |eta_i| - |s~_i|^2/N0 - ln|eta_i| / 2,
// eta_i = 2 r_i conj(s~_i) / N0 + 1 / sigma2.
double direct_metric(std::span<const cplx> r, std::span<const cplx> tilde, double n0, double sigma2)
{
    double v = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const cplx eta = 2.0 * r[i] * std::conj(tilde[i]) / n0 + 1.0 / sigma2;
        v += std::abs(eta) - std::norm(tilde[i]) / n0 - 0.5 * std::log(std::abs(eta));
    }
    return v;
}

struct Draw {
    std::vector<std::uint32_t> idx;
    std::vector<cplx> rx;
};

Draw draw(const Constellation& q, const Precoder& p, const PhaseNoiseChannel& ch, Stream& data, Stream& phase,
          Stream& noise)
{
    const std::size_t n = p.channels();
    Draw d{std::vector<std::uint32_t>(n), std::vector<cplx>(n)};
    std::vector<cplx> s(n), tx(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.idx[i] = data.index(q.order());
        s[i] = q.point(d.idx[i]);
    }
    p.forward(s, tx);
    ch.apply(tx, phase, noise, d.rx);
    return d;
}

// All candidates of X^N in odometer order (channel 0 most significant).
std::vector<std::vector<cplx>> enumerate_tilde(const Constellation& q, const Precoder& p)
{
    const std::size_t n = p.channels();
    std::size_t count = 1;
    for (std::size_t i = 0; i < n; ++i) {
        count *= q.order();
    }
    std::vector<std::vector<cplx>> out(count, std::vector<cplx>(n));
    std::vector<cplx> s(n);
    for (std::size_t c = 0; c < count; ++c) {
        std::size_t rest = c;
        for (std::size_t i = n; i-- > 0;) {
            s[i] = q.point(static_cast<std::uint32_t>(rest % q.order()));
            rest /= q.order();
        }
        p.forward(s, out[c]);
    }
    return out;
}

std::vector<std::uint32_t> decode(std::size_t c, std::size_t n, unsigned m)
{
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = n; i-- > 0;) {
        idx[i] = static_cast<std::uint32_t>(c % m);
        c /= m;
    }
    return idx;
}

}  // namespace

TEST_CASE("joint detector: pruned search equals brute force on the direct metric")
{
    for (unsigned m : {4U, 16U}) {
        for (std::size_t n : {2, 3}) {
            const auto q = Constellation::square_qam(m);
            const Precoder p(n == 2 ? RotationRecipe::hadamard() : RotationRecipe::random(11), n);
            const ChannelParams cp{n, 1.0, snr_to_n0(12.0), 3e-2};
            JointDetectorConfig cfg;
            cfg.n0 = cp.n0;
            cfg.sigma2_p = cp.sigma2_p;
            const JointDetector joint(q, p, cfg);
            const auto cands = enumerate_tilde(q, p);
            const PhaseNoiseChannel ch(cp);
            Stream data(1), phase(2), noise(3);
            std::vector<std::uint32_t> got(n);
            for (int t = 0; t < 200; ++t) {
                const auto d = draw(q, p, ch, data, phase, noise);
                std::size_t best = 0;
                double best_v = -1e300;
                for (std::size_t c = 0; c < cands.size(); ++c) {
                    const double v = direct_metric(d.rx, cands[c], cp.n0, cp.sigma2_p);
                    CHECK(joint.metric(d.rx, c) == doctest::Approx(v).epsilon(1e-12));
                    if (v > best_v) {
                        best_v = v;
                        best = c;
                    }
                }
                joint.detect(d.rx, got);
                CHECK(got == decode(best, n, m));
            }
        }
    }
}

TEST_CASE("joint detector: identity fast path and tiny phase noise")
{
    const auto q = Constellation::square_qam(16);
    const ChannelParams cp{2, 1.0, snr_to_n0(10.0), 1e-9};
    JointDetectorConfig cfg;
    cfg.n0 = cp.n0;
    cfg.sigma2_p = cp.sigma2_p;
    const PhaseNoiseChannel ch(cp);
    Stream data(4), phase(5), noise(6);
    std::vector<std::uint32_t> got(2);

    // Identity: per-channel nearest point.
    const Precoder id(RotationRecipe::identity(), 2);
    const JointDetector joint_id(q, id, cfg);
    for (int t = 0; t < 500; ++t) {
        const auto d = draw(q, id, ch, data, phase, noise);
        joint_id.detect(d.rx, got);
        CHECK(got == per_channel_detect(d.rx, id, q));
    }

    // Rotated, phase noise ~ 0: the metric reduces to minimum Euclidean distance.
    const Precoder h(RotationRecipe::hadamard(), 2);
    const JointDetector joint_h(q, h, cfg);
    const auto cands = enumerate_tilde(q, h);
    for (int t = 0; t < 300; ++t) {
        const auto d = draw(q, h, ch, data, phase, noise);
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            const double dist = std::norm(d.rx[0] - cands[c][0]) + std::norm(d.rx[1] - cands[c][1]);
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        joint_h.detect(d.rx, got);
        CHECK(got == decode(best, 2, 16));
    }
}

TEST_CASE("joint detector: refuses oversized enumeration and bad parameters")
{
    const auto q = Constellation::square_qam(256);
    const Precoder p(RotationRecipe::hadamard(), 4);
    JointDetectorConfig cfg;
    cfg.n0 = 0.01;
    CHECK_THROWS_AS(JointDetector(q, p, cfg), EnumerationRefused);
    cfg.sigma2_p = 0.0;
    CHECK_THROWS_AS(JointDetector(Constellation::square_qam(4), Precoder(RotationRecipe::hadamard(), 2), cfg),
                    std::invalid_argument);
}

TEST_CASE("exact posterior: phase integral matches a plain Riemann sum")
{
    const double n0 = 0.05;
    const double s2 = 0.04;
    const cplx r{0.6, 0.35};
    const cplx t{0.7, 0.2};
    const int steps = 400000;
    const double lim = 10.0 * std::sqrt(s2);
    const double dt = 2.0 * lim / steps;
    double sum = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double th = -lim + k * dt;
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        sum += w * std::exp(-std::norm(r - t * std::polar(1.0, th)) / n0 - th * th / (2.0 * s2));
    }
    const double expected = std::log(sum * dt / (std::numbers::pi * n0 * std::sqrt(2.0 * std::numbers::pi * s2)));
    const auto q = log_phase_integral(r, t, n0, s2);
    CHECK(q.converged);
    CHECK(q.log_value == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("exact posterior: normalized, and agrees with the joint metric's decision")
{
    const auto q = Constellation::square_qam(4);
    const Precoder h(RotationRecipe::hadamard(), 2);
    const ChannelParams cp{2, 1.0, snr_to_n0(15.0), 1e-2};
    const ExactPosterior oracle(q, h, cp.n0, cp.sigma2_p);
    JointDetectorConfig cfg;
    cfg.n0 = cp.n0;
    cfg.sigma2_p = cp.sigma2_p;
    const JointDetector joint(q, h, cfg);
    const PhaseNoiseChannel ch(cp);
    Stream data(7), phase(8), noise(9);
    std::vector<std::uint32_t> got(2);
    int agree = 0;
    for (int t = 0; t < 300; ++t) {
        const auto d = draw(q, h, ch, data, phase, noise);
        const auto pmf = oracle.posterior(d.rx);
        CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        joint.detect(d.rx, got);
        agree += got == oracle.detect(d.rx);
    }
    CHECK(agree >= 298);
    CHECK(ExactPosterior::last_quality().converged);
}

TEST_CASE("llrs: demapper equals generic log-sum-exp and naive sums")
{
    Stream rng(21);
    for (unsigned m : {4U, 16U, 64U}) {
        const auto q = Constellation::square_qam(m);
        const unsigned b = q.bits_per_symbol();
        const double n0 = 0.08;
        const double alpha = 0.93;
        const SquareQamDemapper fast(q, n0, alpha);
        std::vector<double> l1(b), l2(b);
        for (int t = 0; t < 200; ++t) {
            const cplx y = alpha * q.point(rng.index(m)) + rng.complex_normal(n0);
            fast.llrs(y, l1);
            symbol_llrs(y, q, n0, alpha, l2);
            for (unsigned k = 0; k < b; ++k) {
                double num = 0.0;
                double den = 0.0;
                for (std::uint32_t x = 0; x < m; ++x) {
                    const double w = std::exp(-std::norm(y - alpha * q.point(x)) / n0);
                    (q.bit(x, k) ? num : den) += w;
                }
                const double naive = std::clamp(std::log(num / den), -llr_clamp, llr_clamp);
                CHECK(l1[k] == doctest::Approx(naive).epsilon(1e-9).scale(1.0));
                CHECK(l2[k] == doctest::Approx(naive).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("llrs: QPSK at the origin is uninformative, far points clamp")
{
    const auto q = Constellation::square_qam(4);
    const Precoder id(RotationRecipe::identity(), 1);
    const std::vector<cplx> zero{cplx{0.0, 0.0}};
    const auto soft = per_channel_soft(zero, id, q, 0.1, 1.0);
    CHECK(soft.llrs[0] == doctest::Approx(0.0));
    CHECK(soft.llrs[1] == doctest::Approx(0.0));
    const std::vector<cplx> far{cplx{-100.0, 100.0}};
    const auto hard = per_channel_soft(far, id, q, 0.1, 1.0);
    CHECK(std::abs(hard.llrs[0]) == llr_clamp);
    CHECK(std::abs(hard.llrs[1]) == llr_clamp);
    CHECK_THROWS(per_channel_soft(zero, id, q, 0.0, 1.0));
    CHECK_THROWS(per_channel_soft(zero, id, q, 0.1, 1.5));
}
