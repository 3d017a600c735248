#include "rotsim/selftest.hpp"

#include <doctest.h>

using namespace rotsim;

TEST_CASE("selftest: all checks pass")
{
    const auto results = run_selftest();
    CHECK(results.size() == 9);
    for (const auto& r : results) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.passed);
    }
}

TEST_CASE("selftest: a transposed H2 is caught")
{
    SelftestHooks hooks;
    hooks.hadamard = [](std::size_t n) {
        const RotationMatrix m = hadamard_rotation(n);
        return n == 2 ? m.transpose() : m;
    };
    const auto results = run_selftest(hooks);
    REQUIRE_FALSE(results.empty());
    CHECK(results.front().name == "hadamard recursion");
    CHECK_FALSE(results.front().passed);
}

TEST_CASE("selftest: a throwing constructor is reported, not propagated")
{
    SelftestHooks hooks;
    hooks.hadamard = [](std::size_t) -> RotationMatrix { throw std::runtime_error("broken"); };
    const auto results = run_selftest(hooks);
    CHECK_FALSE(results.front().passed);
}
