#include "rotsim/channel.hpp"

#include "rotsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace rotsim {

void ChannelParams::validate() const
{
    if (channels < 1) {
        throw std::invalid_argument("channel: N must be >= 1");
    }
    if (!(n0 > 0.0) || !std::isfinite(n0)) {
        throw std::invalid_argument("channel: N0 must be positive");
    }
    if (!(sigma2_p >= 0.0) || !std::isfinite(sigma2_p)) {
        throw std::invalid_argument("channel: sigma2_p must be non-negative");
    }
    if (!(es > 0.0) || !std::isfinite(es)) {
        throw std::invalid_argument("channel: Es must be positive");
    }
}

double snr_to_n0(double snr_db, double es)
{
    if (!(es > 0.0)) {
        throw std::invalid_argument("snr_to_n0: Es must be positive");
    }
    return es / std::pow(10.0, snr_db / 10.0);
}

double asymptotic_alpha(double sigma2_p)
{
    return std::exp(-0.5 * sigma2_p);
}

double asymptotic_noise_variance(const ChannelParams& params)
{
    return params.n0 - params.es * std::expm1(-params.sigma2_p);
}

double derotated_error_variance(const ChannelParams& params)
{
    return params.n0 - 2.0 * params.es * std::expm1(-0.5 * params.sigma2_p);
}

PhaseNoiseChannel::PhaseNoiseChannel(const ChannelParams& params)
    : params_(params), sigma_p_(std::sqrt(params.sigma2_p)), noise_sd_(std::sqrt(0.5 * params.n0))
{
    params_.validate();
}

void PhaseNoiseChannel::apply(std::span<const cplx> tx, Stream& phase, Stream& noise,
                              std::span<cplx> rx, std::span<double> theta_out,
                              std::span<cplx> noise_out) const
{
    const std::size_t n = params_.channels;
    if (tx.size() != n || rx.size() != n) {
        throw std::invalid_argument("channel: expected one sample per channel");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = sigma_p_ * phase.normal();
        const double re = noise_sd_ * noise.normal();
        const double im = noise_sd_ * noise.normal();
        const cplx w{re, im};
        rx[i] = tx[i] * cplx{std::cos(theta), std::sin(theta)} + w;
        if (!theta_out.empty()) {
            theta_out[i] = theta;
        }
        if (!noise_out.empty()) {
            noise_out[i] = w;
        }
    }
}

AsymptoticChannel::AsymptoticChannel(const ChannelParams& params)
    : alpha_(asymptotic_alpha(params.sigma2_p)),
      variance_(asymptotic_noise_variance(params)),
      noise_sd_(std::sqrt(0.5 * variance_))
{
    params.validate();
}

void AsymptoticChannel::apply(std::span<const cplx> s, Stream& noise, std::span<cplx> rx) const
{
    if (s.size() != rx.size()) {
        throw std::invalid_argument("asymptotic channel: size mismatch");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double re = noise_sd_ * noise.normal();
        const double im = noise_sd_ * noise.normal();
        rx[i] = alpha_ * s[i] + cplx{re, im};
    }
}

TransmissionBatch transmit(std::span<const std::uint32_t> symbols, const Constellation& constellation,
                           const Precoder& rotation, const ChannelParams& params, Stream& phase,
                           Stream& noise)
{
    params.validate();
    const std::size_t n = params.channels;
    if (rotation.channels() != n) {
        throw std::invalid_argument("transmit: rotation dimension must be 2N");
    }
    if (symbols.size() % n != 0) {
        throw std::invalid_argument("transmit: symbol count must be a multiple of N");
    }
    const PhaseNoiseChannel channel(params);
    TransmissionBatch batch;
    batch.channels = n;
    batch.symbols.assign(symbols.begin(), symbols.end());
    batch.transmitted.resize(symbols.size());
    batch.theta.resize(symbols.size());
    batch.noise.resize(symbols.size());
    batch.received.resize(symbols.size());
    const unsigned m = constellation.bits_per_symbol();
    batch.bits.reserve(symbols.size() * m);
    std::vector<cplx> s(n);
    for (std::size_t b = 0; b < symbols.size() / n; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t idx = symbols[b * n + i];
            if (idx >= constellation.order()) {
                throw std::invalid_argument("transmit: symbol index outside the constellation");
            }
            s[i] = constellation.point(idx);
            for (unsigned k = 0; k < m; ++k) {
                batch.bits.push_back(static_cast<std::uint8_t>(constellation.bit(idx, k)));
            }
        }
        const auto offset = b * n;
        std::span<cplx> tx(batch.transmitted.data() + offset, n);
        rotation.forward(s, tx);
        channel.apply(tx, phase, noise, std::span<cplx>(batch.received.data() + offset, n),
                      std::span<double>(batch.theta.data() + offset, n),
                      std::span<cplx>(batch.noise.data() + offset, n));
    }
    return batch;
}

std::vector<cplx> asymptotic_transmit(std::span<const std::uint32_t> symbols,
                                      const Constellation& constellation,
                                      const ChannelParams& params, Stream& noise)
{
    const AsymptoticChannel channel(params);
    std::vector<cplx> s(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] >= constellation.order()) {
            throw std::invalid_argument("asymptotic_transmit: symbol index outside the constellation");
        }
        s[i] = constellation.point(symbols[i]);
    }
    std::vector<cplx> rx(symbols.size());
    channel.apply(s, noise, rx);
    return rx;
}

}  // namespace rotsim
