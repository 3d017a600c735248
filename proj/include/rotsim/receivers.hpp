#pragma once

#include "rotsim/constellation.hpp"
#include "rotsim/rotations.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rotsim {

// Joint enumeration of |X|^N exceeded the configured cap.
class EnumerationRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// LLRs are clamped to this magnitude (nats).
inline constexpr double llr_clamp = 50.0;

struct JointDetectorConfig {
    static constexpr std::size_t default_enumeration_cap = std::size_t{1} << 24;

    double n0 = 1.0;
    double sigma2_p = 1e-2;
    std::size_t enumeration_cap = default_enumeration_cap;
};

/// Approximate MAP detector over X^N that uses the phase-noise statistics.
///
/// Maximizes sum_i [ |eta_i| - |s~_i|^2 / N0 - 0.5 ln|eta_i| ] over s in X^N,
/// s~ = f_R(s), eta_i = 2 r_i conj(s~_i) / N0 + 1 / sigma2_p. Candidates are
/// enumerated in odometer order with channel 0 most significant, so the
/// candidate index is the lexicographic rank and ties go to the lowest one.
///
/// The search is exact: every candidate's metric is bounded from above with
/// a cheap lower bound on ln|eta|, and only candidates whose bound reaches the
/// incumbent are scored exactly. Unrotated transmission factorizes per
/// channel and is searched channel by channel.
class JointDetector {
public:
    JointDetector(const Constellation& constellation, const Precoder& rotation,
                  const JointDetectorConfig& config);

    [[nodiscard]] std::size_t channels() const { return channels_; }
    [[nodiscard]] std::size_t candidates() const { return candidates_; }

    // Candidate index -> per-channel symbol indices.
    void decode_candidate(std::size_t candidate, std::span<std::uint32_t> s) const;

    // Exact metric of one candidate.
    [[nodiscard]] double metric(std::span<const cplx> r, std::size_t candidate) const;

    void detect(std::span<const cplx> r, std::span<std::uint32_t> s_hat) const;
    [[nodiscard]] std::vector<std::uint32_t> detect(std::span<const cplx> r) const;

private:
    [[nodiscard]] std::size_t seed_candidate(std::span<const cplx> r) const;
    void detect_factorized(std::span<const cplx> r, std::span<std::uint32_t> s_hat) const;

    const Constellation* constellation_;
    const Precoder* rotation_;
    std::size_t channels_;
    std::size_t candidates_;
    double n0_;
    double inv_sigma2_;
    bool factorized_;
    // Transmitted components per candidate, channel-major: [i * K + c].
    std::vector<double> tilde_re_;
    std::vector<double> tilde_im_;
    // sum_i |s~_i|^2 / N0 per candidate.
    std::vector<double> energy_;
};

struct QuadratureResult {
    double log_value = 0.0;
    // Estimated relative error of the integral.
    double achieved_tolerance = 0.0;
    bool converged = true;
};

// ln of  int CN(r; s~ e^{j theta}, N0) N(theta; 0, sigma2) d theta  over
// [-8 sigma, 8 sigma], adaptive Simpson on the max-shifted integrand.
QuadratureResult log_phase_integral(cplx r, cplx s_tilde, double n0, double sigma2_p,
                                    double rel_tol = 1e-9);

/// Brute-force MAP reference: exact Gaussian phase integral per channel,
/// no Tikhonov or Bessel approximation. Test-scale only (N <= 2, small |X|).
class ExactPosterior {
public:
    static constexpr std::size_t max_candidates = 4096;

    ExactPosterior(const Constellation& constellation, const Precoder& rotation, double n0,
                   double sigma2_p, double rel_tol = 1e-9);

    [[nodiscard]] std::size_t candidates() const { return candidates_; }

    // Unnormalized log posterior per candidate (odometer order).
    [[nodiscard]] std::vector<double> log_posterior(std::span<const cplx> r) const;
    // Normalized posterior PMF over candidates.
    [[nodiscard]] std::vector<double> posterior(std::span<const cplx> r) const;
    [[nodiscard]] std::vector<std::uint32_t> detect(std::span<const cplx> r) const;

    // Worst relative tolerance reached and whether every integral converged,
    // over all calls so far on this thread.
    [[nodiscard]] static QuadratureResult last_quality();

private:
    const Constellation* constellation_;
    std::size_t channels_;
    std::size_t candidates_;
    double n0_;
    double sigma2_p_;
    double rel_tol_;
    std::vector<cplx> tilde_;  // [c * N + i]
};

// Derotate with R^T, then nearest point per channel (ties -> lowest index).
std::vector<std::uint32_t> per_channel_detect(std::span<const cplx> r, const Precoder& rotation,
                                              const Constellation& constellation);

struct SoftOutput {
    std::size_t channels = 0;
    unsigned bits_per_symbol = 0;
    // Natural-log LLRs ln P(b=1)/P(b=0), [i * m + k], clamped to +-llr_clamp.
    std::vector<double> llrs;
};

// Per-bit LLRs of derotated samples under the Gaussian decoding metric
// exp(-|r~ - alpha x|^2 / N0_eff), evaluated by log-sum-exp over X.
SoftOutput per_channel_soft(std::span<const cplx> r, const Precoder& rotation,
                            const Constellation& constellation, double n0_eff, double alpha);

// Same metric for one already-derotated sample; writes m LLRs.
void symbol_llrs(cplx r_tilde, const Constellation& constellation, double n0_eff, double alpha,
                 std::span<double> out);

/// Per-axis evaluation of the same LLRs for square QAM.
///
/// The Gaussian metric factorizes over the in-phase and quadrature axes and
/// each label bit lives on one axis, so every LLR reduces to a log-sum-exp
/// over sqrt(M) axis levels.
class SquareQamDemapper {
public:
    SquareQamDemapper(const Constellation& constellation, double n0_eff, double alpha);

    void llrs(cplx r_tilde, std::span<double> out) const;

private:
    void axis_llrs(double y, std::span<double> out) const;

    const Constellation* constellation_;
    double inv_n0_;
    double alpha_;
};

}  // namespace rotsim
