#pragma once

#include "rotsim/metrics.hpp"
#include "rotsim/receivers.hpp"
#include "rotsim/rotations.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rotsim {

enum class ReceiverKind { joint, per_channel };
// model: r = Theta f_R(s) + n. asymptotic: the large-N Hadamard surrogate
// r~ = alpha s + n~ (an identity rotation still uses the model channel, so it
// serves as the unrotated baseline at the same coordinates).
enum class ChannelMode { model, asymptotic };
enum class Fidelity { paper, quick };

std::string_view to_string(ReceiverKind k);
std::string_view to_string(ChannelMode m);
std::string_view to_string(Fidelity f);
ReceiverKind parse_receiver(std::string_view text);
ChannelMode parse_channel_mode(std::string_view text);
Fidelity parse_fidelity(std::string_view text);

// Minimum symbols per point in paper-fidelity mode.
inline constexpr std::uint64_t paper_min_symbols = 1'000'000;
// Blocks per random-number chunk. Every chunk draws from its own substreams,
// so results do not depend on how chunks are scheduled or grouped. Changing
// this constant changes every simulated number.
inline constexpr std::uint64_t chunk_blocks = 1024;

struct PlanPoint {
    std::size_t channels = 2;
    unsigned qam = 64;
    double snr_db = 22.5;
    double sigma2_p = 1e-2;
    RotationRecipe rotation{};
    ReceiverKind receiver = ReceiverKind::per_channel;
    ChannelMode channel = ChannelMode::model;
    std::uint64_t min_symbols = paper_min_symbols;

    // Whole blocks needed to reach min_symbols.
    [[nodiscard]] std::uint64_t blocks() const;

    // Substream id of the point. With common random numbers every rotation
    // at the same remaining coordinates shares data, phase and noise draws.
    [[nodiscard]] std::uint64_t stream_id(bool common_random_numbers) const;

    // Coordinates without the rotation, as text (stable).
    [[nodiscard]] std::string coordinates() const;
};

struct EngineOptions {
    unsigned workers = 1;
    // Number of partial reports the chunk range is split into before the
    // final merge. Any value gives identical results.
    unsigned shards = 1;
    bool common_random_numbers = true;
    std::size_t enumeration_cap = JointDetectorConfig::default_enumeration_cap;
    // Keep the per-chunk reports (for paired comparisons).
    bool keep_chunks = false;
};

struct PointRun {
    MetricsReport report;
    std::vector<MetricsReport> chunks;  // only with keep_chunks
};

// Runs one point. Throws std::invalid_argument for an invalid point and
// EnumerationRefused when the joint receiver cannot enumerate X^N.
PointRun run_point_detailed(const PlanPoint& point, std::uint64_t master_seed,
                            const EngineOptions& options);
MetricsReport run_point(const PlanPoint& point, std::uint64_t master_seed,
                        const EngineOptions& options);

// Checks a point without simulating it; throws like run_point.
void validate_point(const PlanPoint& point);

/// Linear regression of derotated samples on the data symbols,
/// r~ = alpha s + e, over every channel of every block of a model-channel run
/// (same draws as run_point with this point and seed).
struct DerotationStatistics {
    double alpha = 0.0;
    double noise_variance = 0.0;       // mean |e|^2
    cplx pseudo_variance{};            // mean e^2
    double pseudo_variance_stderr = 0.0;
    std::uint64_t samples = 0;
};

DerotationStatistics measure_derotation(const PlanPoint& point, std::uint64_t master_seed,
                                        bool common_random_numbers = true);

enum class Metric { bler, ser, ber, air };
std::string_view to_string(Metric m);
double metric_value(const MetricsReport& r, Metric m);
double metric_stderr(const MetricsReport& r, Metric m);

// Standard error of mean(a) - mean(b) from chunk-level differences of two
// runs over the same chunk grid.
double paired_difference_stderr(const std::vector<MetricsReport>& a,
                                 const std::vector<MetricsReport>& b, Metric m);

struct ExperimentPlan {
    std::vector<std::size_t> channels{2};
    std::vector<unsigned> qam{64};
    std::vector<double> snr_db{22.5};
    std::vector<double> sigma2_p{1e-2};
    std::vector<RotationRecipe> rotations{RotationRecipe::identity()};
    std::vector<ReceiverKind> receivers{ReceiverKind::per_channel};
    std::vector<ChannelMode> channel_modes{ChannelMode::model};
    std::optional<std::uint64_t> min_symbols;
    std::uint64_t seed = 1;
    Fidelity fidelity = Fidelity::paper;
    bool common_random_numbers = true;

    static constexpr std::uint64_t quick_default_symbols = 100'000;

    // min_symbols, or the fidelity default when unset.
    [[nodiscard]] std::uint64_t symbols_per_point() const;

    // Throws std::invalid_argument (empty axis, paper fidelity below 10^6).
    void validate() const;

    // Cartesian grid: N, M, SNR, sigma2_p, channel, receiver, rotation (the
    // rotation varies fastest).
    [[nodiscard]] std::vector<PlanPoint> points() const;
};

struct PointOutcome {
    PlanPoint point;
    std::optional<MetricsReport> report;
    std::string error;
};

// Runs every grid point; a failing point is recorded and the sweep goes on.
// `progress` (optional) is called after each point.
std::vector<PointOutcome> run_sweep(
    const ExperimentPlan& plan, const EngineOptions& options,
    const std::function<void(std::size_t, std::size_t, const PointOutcome&)>& progress = {});

// Index of the unrotated point with the same coordinates as outcomes[i].
std::optional<std::size_t> find_baseline(const std::vector<PointOutcome>& outcomes, std::size_t i);

}  // namespace rotsim
