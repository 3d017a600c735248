#include "rotsim/selftest.hpp"

#include "rotsim/channel.hpp"
#include "rotsim/constellation.hpp"
#include "rotsim/montecarlo.hpp"
#include "rotsim/receivers.hpp"
#include "rotsim/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>

namespace rotsim {

namespace {

std::string format(const char* fmt, double a, double b)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

CheckResult hadamard_recursion(const SelftestHooks& hooks)
{
    CheckResult c{"hadamard recursion", true, ""};
    const double h = 1.0 / std::numbers::sqrt2;
    const RotationMatrix h2_expected(2, {h, h, -h, h});
    double worst = 0.0;
    try {
        const RotationMatrix h1 = hooks.hadamard(1);
        worst = std::max(worst, std::abs(h1(0, 0) - 1.0));
        const RotationMatrix h2 = hooks.hadamard(2);
        worst = std::max(worst, max_abs_difference(h2, h2_expected));
        for (std::size_t order = 4; order <= 64; order *= 2) {
            const RotationMatrix built = hooks.hadamard(order);
            const RotationMatrix expected = kron(h2_expected, hooks.hadamard(order / 2));
            worst = std::max(worst, max_abs_difference(built, expected));
            const double magnitude = std::pow(h, std::log2(static_cast<double>(order)));
            for (double e : built.entries()) {
                worst = std::max(worst, std::abs(std::abs(e) - magnitude));
            }
        }
    } catch (const std::exception& e) {
        c.passed = false;
        c.detail = std::string("construction failed: ") + e.what();
        return c;
    }
    c.passed = worst <= 1e-12;
    c.detail = format("max entry deviation %.3g (limit %.0e)", worst, 1e-12);
    return c;
}

CheckResult phase_align()
{
    CheckResult c{"phase-align identity", true, ""};
    double worst = 0.0;
    for (std::size_t n = 2; n <= 16; n *= 2) {
        worst = std::max(worst, phase_align_identity_error(n));
    }
    c.passed = worst < 1e-12;
    c.detail = format("max deviation over N=2..16: %.3g (limit %.0e)", worst, 1e-12);
    return c;
}

CheckResult ser_matrix()
{
    CheckResult c{"R_SER matrix", true, ""};
    const double h = 1.0 / std::numbers::sqrt2;
    const RotationMatrix expected(4, {h, h, 0, 0, 0, 0, h, h, h, -h, 0, 0, 0, 0, -h, h});
    const RotationMatrix r = ser_rotation_4d();
    const double d = max_abs_difference(r, expected);
    c.passed = d == 0.0 && std::abs(r.determinant() - 1.0) < 1e-12;
    c.detail = format("entry deviation %.3g, det %.15g", d, r.determinant());
    return c;
}

CheckResult butterfly_vs_dense()
{
    CheckResult c{"fast hadamard vs dense", true, ""};
    Stream rng(12345);
    double worst = 0.0;
    for (std::size_t n = 2; n <= 32; n *= 2) {
        std::vector<cplx> s(n);
        for (auto& v : s) {
            v = rng.complex_normal(1.0);
        }
        const RotationMatrix dense = kron(hadamard_rotation(n), RotationMatrix::identity(2));
        const auto a = complex_hadamard_apply(s);
        const auto b = apply_real(dense, s);
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(a[i] - b[i]));
        }
    }
    c.passed = worst <= 1e-12;
    c.detail = format("max deviation %.3g (limit %.0e)", worst, 1e-12);
    return c;
}

CheckResult round_trip()
{
    CheckResult c{"rotation round trip", true, ""};
    Stream rng(777);
    const RotationMatrix r = random_rotation(8, rng);
    const RotationMatrix rt = r.transpose();
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<cplx> s(4);
        for (auto& v : s) {
            v = rng.complex_normal(1.0);
        }
        const auto back = apply_real(rt, apply_real(r, s));
        for (std::size_t i = 0; i < s.size(); ++i) {
            worst = std::max(worst, std::abs(back[i] - s[i]));
        }
    }
    c.passed = worst <= 1e-12 && r.orthogonality_error() <= 1e-12;
    c.detail = format("max deviation %.3g, orthogonality error %.3g", worst, r.orthogonality_error());
    return c;
}

CheckResult constellation_checks()
{
    CheckResult c{"QAM energy and Gray labels", true, ""};
    double worst = 0.0;
    int gray_violations = 0;
    for (unsigned m : {4U, 16U, 64U, 256U, 1024U}) {
        const auto q = Constellation::square_qam(m);
        double e = 0.0;
        for (auto p : q.points()) {
            e += std::norm(p);
        }
        worst = std::max(worst, std::abs(e / m - 1.0));
        const auto labels = q.axis_labels();
        for (std::size_t j = 1; j < labels.size(); ++j) {
            gray_violations += std::popcount(labels[j] ^ labels[j - 1]) != 1;
        }
    }
    c.passed = worst <= 1e-12 && gray_violations == 0;
    c.detail = format("energy deviation %.3g, Gray violations %.0f", worst, gray_violations);
    return c;
}

CheckResult joint_vs_oracle()
{
    CheckResult c{"joint detector vs exact posterior", true, ""};
    const auto q = Constellation::square_qam(4);
    const Precoder h(RotationRecipe::hadamard(), 2);
    ChannelParams p{2, 1.0, snr_to_n0(15.0), 1e-2};
    JointDetectorConfig cfg;
    cfg.n0 = p.n0;
    cfg.sigma2_p = p.sigma2_p;
    const JointDetector joint(q, h, cfg);
    const ExactPosterior oracle(q, h, p.n0, p.sigma2_p);
    const PhaseNoiseChannel ch(p);
    Stream data(1), phase(2), noise(3);
    const int draws = 2000;
    int agree = 0;
    std::vector<cplx> s(2), tx(2), rx(2);
    for (int t = 0; t < draws; ++t) {
        for (auto& v : s) {
            v = q.point(data.index(4));
        }
        h.forward(s, tx);
        ch.apply(tx, phase, noise, rx);
        agree += joint.detect(rx) == oracle.detect(rx);
    }
    const double rate = static_cast<double>(agree) / draws;
    c.passed = rate >= 0.995;
    c.detail = format("agreement %.4f over %.0f draws (limit 0.995)", rate, draws);
    return c;
}

CheckResult pruned_vs_exhaustive()
{
    CheckResult c{"pruned joint search vs exhaustive", true, ""};
    const auto q = Constellation::square_qam(64);
    const Precoder h(RotationRecipe::hadamard(), 2);
    ChannelParams p{2, 1.0, snr_to_n0(22.5), 1e-2};
    JointDetectorConfig cfg;
    cfg.n0 = p.n0;
    cfg.sigma2_p = p.sigma2_p;
    const JointDetector joint(q, h, cfg);
    const PhaseNoiseChannel ch(p);
    Stream data(4), phase(5), noise(6);
    int mismatches = 0;
    const int draws = 300;
    std::vector<cplx> s(2), tx(2), rx(2);
    std::vector<std::uint32_t> idx(2);
    for (int t = 0; t < draws; ++t) {
        for (auto& v : s) {
            v = q.point(data.index(64));
        }
        h.forward(s, tx);
        ch.apply(tx, phase, noise, rx);
        std::size_t best = 0;
        double best_v = joint.metric(rx, 0);
        for (std::size_t k = 1; k < joint.candidates(); ++k) {
            const double v = joint.metric(rx, k);
            if (v > best_v) {
                best_v = v;
                best = k;
            }
        }
        joint.decode_candidate(best, idx);
        mismatches += joint.detect(rx) != idx;
    }
    c.passed = mismatches == 0;
    c.detail = format("%.0f mismatches over %.0f draws", mismatches, draws);
    return c;
}

CheckResult surrogate_statistics()
{
    CheckResult c{"asymptotic channel statistics", true, ""};
    PlanPoint pt;
    pt.channels = 64;
    pt.qam = 64;
    pt.snr_db = 22.5;
    pt.sigma2_p = 1e-2;
    pt.rotation = RotationRecipe::hadamard();
    pt.min_symbols = 200'000;
    const auto st = measure_derotation(pt, 2024);
    ChannelParams p{64, 1.0, snr_to_n0(22.5), 1e-2};
    const double alpha = asymptotic_alpha(p.sigma2_p);
    const double var = asymptotic_noise_variance(p);
    const double da = std::abs(st.alpha / alpha - 1.0);
    const double dv = std::abs(st.noise_variance / var - 1.0);
    c.passed = da < 0.01 && dv < 0.03;
    c.detail = format("alpha rel. error %.3g (limit 0.01), variance rel. error %.3g (limit 0.03)", da, dv);
    return c;
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestHooks& hooks)
{
    std::vector<CheckResult> out;
    auto guarded = [&](const char* name, auto&& check) {
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    guarded("hadamard recursion", [&] { return hadamard_recursion(hooks); });
    guarded("phase-align identity", phase_align);
    guarded("R_SER matrix", ser_matrix);
    guarded("fast hadamard vs dense", butterfly_vs_dense);
    guarded("rotation round trip", round_trip);
    guarded("QAM energy and Gray labels", constellation_checks);
    guarded("pruned joint search vs exhaustive", pruned_vs_exhaustive);
    guarded("joint detector vs exact posterior", joint_vs_oracle);
    guarded("asymptotic channel statistics", surrogate_statistics);
    return out;
}

}  // namespace rotsim
