#pragma once

#include "rotsim/rotations.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rotsim {

struct CheckResult {
    std::string name;
    bool passed = false;
    // Observed vs expected, human readable.
    std::string detail;
};

struct SelftestHooks {
    // Hadamard constructor under test; replaceable to prove the check bites.
    std::function<RotationMatrix(std::size_t)> hadamard = hadamard_rotation;
};

// Matrix identities, oracle agreements and surrogate-channel statistics at
// reduced scale. Runs in well under a minute.
std::vector<CheckResult> run_selftest(const SelftestHooks& hooks = {});

}  // namespace rotsim
