#include "rotsim/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rotsim;

namespace {

// Smooth synthetic BLER surface with its minimum 0.2 at `best`.
MetricsReport synthetic(const GivensAngles4D& a)
{
    const double best[4] = {0.5, -1.0, 2.0, 0.0};
    double f = 0.2;
    for (int i = 0; i < 4; ++i) {
        f += 0.05 * (1.0 - std::cos(a[i] - best[i]));
    }
    MetricsReport r;
    r.bits_per_symbol = 2;
    r.n_blocks = 1'000'000;
    r.n_symbols = 2 * r.n_blocks;
    r.n_bits = 4 * r.n_blocks;
    r.block_errors = static_cast<std::uint64_t>(std::llround(f * 1e6));
    return r;
}

OptimizerConfig config()
{
    OptimizerConfig c;
    c.point.qam = 4;
    c.point.snr_db = 12.0;
    c.point.sigma2_p = 2e-2;
    c.point.min_symbols = 8192;
    c.fidelity = Fidelity::quick;
    c.budget = 60;
    c.initial_design = 16;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("optimizer: latin hypercube strata and box")
{
    const auto pts = latin_hypercube(10, 1);
    REQUIRE(pts.size() == 10);
    for (int d = 0; d < 4; ++d) {
        std::vector<int> hit(10, 0);
        for (const auto& p : pts) {
            CHECK(p[d] >= -std::numbers::pi);
            CHECK(p[d] < std::numbers::pi);
            ++hit[static_cast<int>((p[d] + std::numbers::pi) / (2 * std::numbers::pi) * 10)];
        }
        for (int h : hit) {
            CHECK(h == 1);
        }
    }
}

TEST_CASE("optimizer: rbf search finds the synthetic minimum")
{
    const auto cfg = config();
    const auto res = optimize_rotation(cfg, synthetic);
    CHECK(res.trace.size() == cfg.budget);
    CHECK(res.budget_exhausted);
    CHECK(res.objective < 0.205);
    int flagged = 0;
    double best = 1e9;
    for (const auto& row : res.trace) {
        flagged += row.incumbent;
        best = std::min(best, row.objective);
        for (double a : row.angles.values()) {
            CHECK(a >= -std::numbers::pi);
            CHECK(a <= std::numbers::pi);
        }
    }
    CHECK(flagged == 1);
    CHECK(res.trace[res.incumbent_index].incumbent);
    CHECK(res.objective == best);
    CHECK(res.trace.front().phase == "design");
    CHECK(res.trace.back().phase == "rbf");
    CHECK_FALSE(res.noisy_objective);

    // Same seed, same trace.
    const auto again = optimize_rotation(cfg, synthetic);
    REQUIRE(again.trace.size() == res.trace.size());
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        CHECK(again.trace[i].angles == res.trace[i].angles);
    }
}

TEST_CASE("optimizer: budget equal to the initial design")
{
    auto cfg = config();
    cfg.budget = cfg.initial_design;
    const auto res = optimize_rotation(cfg, synthetic);
    CHECK(res.trace.size() == cfg.initial_design);
    for (const auto& row : res.trace) {
        CHECK(row.phase == "design");
    }
}

TEST_CASE("optimizer: nelder-mead alternative")
{
    auto cfg = config();
    cfg.method = SearchMethod::nelder_mead;
    cfg.budget = 120;
    const auto res = optimize_rotation(cfg, synthetic);
    CHECK(res.trace.size() == cfg.budget);
    CHECK(res.objective < 0.21);
}

TEST_CASE("optimizer: flat noisy landscape is flagged")
{
    auto cfg = config();
    cfg.budget = 30;
    auto flat = [](const GivensAngles4D&) {
        MetricsReport r;
        r.bits_per_symbol = 2;
        r.n_blocks = 1000;
        r.n_symbols = 2000;
        r.n_bits = 4000;
        r.block_errors = 100;
        return r;
    };
    CHECK(optimize_rotation(cfg, flat).noisy_objective);
}

TEST_CASE("optimizer: real Monte Carlo evaluations are reproducible")
{
    auto cfg = config();
    cfg.budget = 8;
    cfg.initial_design = 6;
    const auto a = optimize_rotation(cfg);
    const auto b = optimize_rotation(cfg);
    REQUIRE(a.trace.size() == 8);
    CHECK(a.report == b.report);
    CHECK(a.angles == b.angles);
    cfg.budget = 4;
    CHECK_THROWS(cfg.validate());
    cfg.budget = 8;
    cfg.point.channels = 4;
    CHECK_THROWS(cfg.validate());
}
