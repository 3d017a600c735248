#include "rotsim/montecarlo.hpp"
#include "rotsim/plan.hpp"

#include <doctest.h>

#include <sstream>
#include <string>

using namespace rotsim;

namespace {

int error_line(const std::string& text)
{
    try {
        (void)parse_plan(text);
    } catch (const PlanError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("plan: full example")
{
    const auto plan = parse_plan(R"(# sweep
channels = [2, 4]
qam = 64
snr_db = 22.5
sigma2_p = [1e-3, 1e-2,
            1e-1]
rotations = [identity, hadamard, givens4(0.1, 0.2, 0.3, 0.4)]
receiver = per-channel
channel = model
min_symbols = 1e6
seed = 42
fidelity = paper
common_random_numbers = false
)");
    CHECK(plan.channels == std::vector<std::size_t>{2, 4});
    CHECK(plan.sigma2_p.size() == 3);
    CHECK(plan.rotations.size() == 3);
    CHECK(plan.rotations[2].kind == RecipeKind::givens4);
    CHECK(plan.symbols_per_point() == 1'000'000);
    CHECK(plan.seed == 42);
    CHECK_FALSE(plan.common_random_numbers);
    CHECK(plan.points().size() == 18);
    CHECK_NOTHROW(plan.validate());
}

TEST_CASE("plan: errors carry line numbers")
{
    CHECK(error_line("qam = 64\ncolour = red\n") == 2);
    CHECK(error_line("qam = 64\n\nqam = 16\n") == 3);
    CHECK(error_line("qam = 64\nsnr_db = loud\n") == 2);
    CHECK(error_line("qam = 64\nrotations = [identity,\n") == 2);
    CHECK(error_line("just some words\n") == 1);
    CHECK(error_line("sigma2_p = -1\n") == 1);
    CHECK(error_line("rotations = [spiral]\n") == 1);
    try {
        (void)parse_plan("\n\nseed = x\n");
        FAIL("no error");
    } catch (const PlanError& e) {
        CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
    }
}

TEST_CASE("plan: fidelity floors")
{
    CHECK(error_line("seed = 1\nmin_symbols = 1000\n") == 2);
    auto plan = parse_plan("min_symbols = 1000\nfidelity = quick\n");
    CHECK_NOTHROW(plan.validate());
    plan.fidelity = Fidelity::paper;
    CHECK_THROWS(plan.validate());
    const auto quick = parse_plan("fidelity = quick\n");
    CHECK(quick.symbols_per_point() == ExperimentPlan::quick_default_symbols);
}

TEST_CASE("csv: header, NA cells and quoting")
{
    const auto plan = parse_plan(R"(
channels = [2, 16]
qam = 4
snr_db = 30
sigma2_p = 1e-4
rotations = [identity, givens4(0.1, 0.2, 0.3, 0.4)]
receiver = joint
fidelity = quick
min_symbols = 2048
)");
    std::ostringstream csv;
    write_csv(csv, run_sweep(plan, EngineOptions{}));
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    std::string expected;
    for (const auto& c : csv_columns()) {
        expected += (expected.empty() ? "" : ",") + c;
    }
    CHECK(header == expected);
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);) {
        rows.push_back(line);
    }
    REQUIRE(rows.size() == 4);
    // N=2 at 30 dB: no block errors, so relative BLER is undefined.
    CHECK(rows[1].find("\"givens4(") != std::string::npos);
    CHECK(rows[1].find(",NA,") != std::string::npos);
    CHECK(rows[1].substr(rows[1].size() - 3) == ",ok");
    // N=16 joint cannot be enumerated.
    CHECK(rows[3].substr(rows[3].size() - 6) == ",error");
}

TEST_CASE("optimizer config parsing")
{
    const auto cfg = parse_optimizer_config(R"(
qam = 16
snr_db = 15
sigma2_p = 0.02
receiver = joint
objective = ber
budget = 40
initial_design = 10
fidelity = quick
symbols_per_eval = 2e4
method = nelder-mead
)");
    CHECK(cfg.point.qam == 16);
    CHECK(cfg.point.receiver == ReceiverKind::joint);
    CHECK(cfg.budget == 40);
    CHECK(cfg.point.min_symbols == 20'000);
    CHECK(cfg.method == SearchMethod::nelder_mead);
    CHECK_NOTHROW(cfg.validate());
    CHECK_THROWS_AS(parse_optimizer_config("objective = fastest\n"), PlanError);
    CHECK_THROWS(parse_optimizer_config("channels = 4\nfidelity = quick\n").validate());
}

TEST_CASE("manifest helpers")
{
    CHECK(content_hash("abc") == content_hash("abc"));
    CHECK(content_hash("abc") != content_hash("abd"));
    const auto ts = utc_timestamp();
    CHECK(ts.size() == 20);
    CHECK(ts.back() == 'Z');
}
