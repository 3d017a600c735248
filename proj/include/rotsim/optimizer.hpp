#pragma once

#include "rotsim/metrics.hpp"
#include "rotsim/montecarlo.hpp"
#include "rotsim/rotations.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rotsim {

enum class Objective { bler, ber, ser, neg_air };
enum class SearchMethod { rbf, nelder_mead };

std::string_view to_string(Objective o);
std::string_view to_string(SearchMethod m);
Objective parse_objective(std::string_view text);
SearchMethod parse_search_method(std::string_view text);

// Value to minimize and its standard error.
double objective_value(const MetricsReport& r, Objective o);
double objective_stderr(const MetricsReport& r, Objective o);

struct OptimizerConfig {
    Objective objective = Objective::bler;
    // Channel point; its rotation is ignored and N must be 2.
    PlanPoint point{};
    std::size_t budget = 150;
    std::size_t initial_design = 24;
    std::uint64_t seed = 1;
    Fidelity fidelity = Fidelity::paper;
    SearchMethod method = SearchMethod::rbf;
    bool common_random_numbers = true;
    // Size of each of the two candidate sets scored on the surrogate.
    std::size_t candidates = 1000;
    EngineOptions engine{};

    // Throws std::invalid_argument.
    void validate() const;
};

struct TraceRow {
    std::size_t index = 0;
    std::string phase;  // design | rbf | nelder-mead
    GivensAngles4D angles{};
    double objective = 0.0;
    double stderr_ = 0.0;
    bool incumbent = false;  // set on the final incumbent only
};

struct OptimizationResult {
    GivensAngles4D angles{};
    MetricsReport report{};
    double objective = 0.0;
    double objective_stderr = 0.0;
    std::size_t incumbent_index = 0;
    std::vector<TraceRow> trace;
    bool budget_exhausted = false;
    // The incumbent's improvement over the initial design's mean objective
    // is within two of its standard errors: the landscape is flat relative
    // to Monte Carlo noise and the incumbent is not meaningfully better.
    bool noisy_objective = false;
    std::vector<std::string> warnings;
};

using Evaluator = std::function<MetricsReport(const GivensAngles4D&)>;

/// Surrogate search over the four free Givens angles.
///
/// Latin hypercube design, then a cubic RBF with linear tail whose next point
/// minimizes the bumpiness-weighted distance to a cycling target value
/// (global to local). The Nelder-Mead method runs restarts of a simplex
/// search instead. Each evaluation is a Monte Carlo run; with common random
/// numbers all candidates see the same data, phase and noise draws.
OptimizationResult optimize_rotation(const OptimizerConfig& config);

// Same search with a caller-supplied evaluator (tests, alternate objectives).
OptimizationResult optimize_rotation(const OptimizerConfig& config, const Evaluator& evaluate);

// One Monte Carlo run of an explicit rotation at `point`.
MetricsReport evaluate_fixed(const RotationRecipe& rotation, PlanPoint point, ReceiverKind receiver,
                             std::uint64_t seed, const EngineOptions& options);

/// Least-squares fit of a 4x4 rotation to G34(a) G12(b) compose_4d(phi).
///
/// With `phase_gauge` false, a = b = 0 and only the four free angles move.
/// The per-channel phase shifts a, b do not change performance, so targets
/// such as H4 that are reachable only up to that gauge are fitted with it.
struct AngleFit {
    GivensAngles4D angles{};
    double gauge34 = 0.0;
    double gauge12 = 0.0;
    // Largest entrywise deviation from the target.
    double residual = 0.0;

    [[nodiscard]] RotationMatrix matrix() const;
};

AngleFit fit_givens_angles(const RotationMatrix& target, bool phase_gauge = true,
                           std::uint64_t seed = 7, int starts = 64);

// Latin hypercube sample of n points in [-pi, pi)^4.
std::vector<std::array<double, 4>> latin_hypercube(std::size_t n, std::uint64_t seed);

}  // namespace rotsim
