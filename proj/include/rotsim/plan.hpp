#pragma once

#include "rotsim/montecarlo.hpp"
#include "rotsim/optimizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rotsim {

inline constexpr std::string_view tool_version = "1.0.0";

/// Error in a plan or config file; `line` is 1-based (0 = whole file).
class PlanError : public std::runtime_error {
public:
    PlanError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line)
    {
    }

    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

/// Flat key = value text. Values are scalars or [a, b, ...] lists; commas
/// inside parentheses do not split (so givens4(...) works as a list item),
/// lists may span lines, and '#' starts a comment.
///
/// Plan keys: channels, qam, snr_db, sigma2_p, rotations, receiver, channel,
/// min_symbols, seed, fidelity, common_random_numbers.
ExperimentPlan parse_plan(std::string_view text);

/// Optimizer keys: channels, qam, snr_db, sigma2_p, receiver, objective,
/// budget, initial_design, symbols_per_eval, seed, fidelity, method,
/// common_random_numbers, candidates.
OptimizerConfig parse_optimizer_config(std::string_view text);

std::string read_text_file(const std::string& path);

// Column names, in order.
const std::vector<std::string>& csv_columns();
// Header plus one row per outcome. Undefined cells are "NA".
void write_csv(std::ostream& out, const std::vector<PointOutcome>& outcomes);
void write_trace_csv(std::ostream& out, const OptimizationResult& result);

// FNV-1a 64 of the bytes, as 16 hex digits.
std::string content_hash(std::string_view bytes);

// UTC, ISO 8601.
std::string utc_timestamp();

struct RunManifest {
    std::string command;
    std::string input_path;
    std::string input_hash;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string fidelity;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
    std::vector<std::string> errors;

    [[nodiscard]] std::string to_json() const;
};

}  // namespace rotsim
