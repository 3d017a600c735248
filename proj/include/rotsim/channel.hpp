#pragma once

#include "rotsim/constellation.hpp"
#include "rotsim/rotations.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rotsim {

class Stream;

struct ChannelParams {
    std::size_t channels = 1;
    double es = 1.0;
    // Complex AWGN variance per channel (N0 / 2 per real dimension).
    double n0 = 1.0;
    // Residual phase-noise variance, rad^2.
    double sigma2_p = 0.0;

    // Throws std::invalid_argument unless N >= 1, N0 > 0, sigma2_p >= 0.
    void validate() const;
};

// N0 = Es / 10^(snr_db / 10); SNR is Es/N0 per complex channel use.
double snr_to_n0(double snr_db, double es = 1.0);

// Per-channel attenuation and noise variance of the large-N Hadamard
// surrogate channel: alpha = exp(-sigma2/2), N0 + Es (1 - exp(-sigma2)).
double asymptotic_alpha(double sigma2_p);
double asymptotic_noise_variance(const ChannelParams& params);

// E|r~ - s|^2 after derotation with any rotation: N0 + 2 Es (1 - alpha).
double derotated_error_variance(const ChannelParams& params);

/// A batch of blocks (one symbol per channel per block), stored block-major:
/// element [b * N + i] belongs to block b, channel i.
struct TransmissionBatch {
    std::size_t channels = 0;
    std::vector<std::uint32_t> symbols;
    std::vector<std::uint8_t> bits;  // m bits per symbol, MSB first
    std::vector<cplx> transmitted;   // f_R(s)
    std::vector<double> theta;       // phase draws, rad
    std::vector<cplx> noise;
    std::vector<cplx> received;

    [[nodiscard]] std::size_t blocks() const { return channels ? symbols.size() / channels : 0; }
};

/// Memoryless model r = Theta f_R(s) + n with theta_i ~ N(0, sigma2_p) and
/// n_i ~ CN(0, N0), all i.i.d. across channels and blocks.
class PhaseNoiseChannel {
public:
    explicit PhaseNoiseChannel(const ChannelParams& params);

    [[nodiscard]] const ChannelParams& params() const { return params_; }

    // Draws N phases from `phase` and N complex noise samples from `noise`.
    // theta_out / noise_out may be empty when the caller does not need them.
    void apply(std::span<const cplx> tx, Stream& phase, Stream& noise, std::span<cplx> rx,
               std::span<double> theta_out = {}, std::span<cplx> noise_out = {}) const;

private:
    ChannelParams params_;
    double sigma_p_;
    double noise_sd_;
};

/// r~_i = alpha s_i + n~_i with n~_i ~ CN(0, N0 + Es (1 - e^{-sigma2})).
class AsymptoticChannel {
public:
    explicit AsymptoticChannel(const ChannelParams& params);

    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double noise_variance() const { return variance_; }

    void apply(std::span<const cplx> s, Stream& noise, std::span<cplx> rx) const;

private:
    double alpha_;
    double variance_;
    double noise_sd_;
};

// Transmits every block of `symbols` (block-major, N per block) through the
// rotated phase-noise channel, recording all draws.
TransmissionBatch transmit(std::span<const std::uint32_t> symbols, const Constellation& constellation,
                           const Precoder& rotation, const ChannelParams& params, Stream& phase,
                           Stream& noise);

// Received samples of the surrogate channel for the given symbols.
std::vector<cplx> asymptotic_transmit(std::span<const std::uint32_t> symbols,
                                      const Constellation& constellation,
                                      const ChannelParams& params, Stream& noise);

}  // namespace rotsim
