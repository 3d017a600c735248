#include "rotsim/constellation.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace rotsim {

Constellation Constellation::square_qam(unsigned order, double es)
{
    if (order < 4 || !std::has_single_bit(order) || std::countr_zero(order) % 2 != 0) {
        throw std::invalid_argument("square_qam: order must be an even power of two (4, 16, 64, ...)");
    }
    if (order > 1024) {
        throw std::invalid_argument("square_qam: orders above 1024 are not supported");
    }
    if (!(es > 0.0) || !std::isfinite(es)) {
        throw std::invalid_argument("square_qam: Es must be positive");
    }
    Constellation c;
    c.bits_ = static_cast<unsigned>(std::countr_zero(order));
    c.side_ = 1U << (c.bits_ / 2);
    c.es_ = es;

    // Odd-integer grid {±1, ±3, ...}; its mean power is 2 (side^2 - 1) / 3.
    const double side = c.side_;
    const double scale = std::sqrt(es / (2.0 * (side * side - 1.0) / 3.0));
    c.step_ = scale;
    const unsigned half_bits = c.bits_ / 2;
    c.axis_levels_.resize(c.side_);
    c.axis_labels_.resize(c.side_);
    std::vector<double> level_of_label(c.side_);
    for (unsigned j = 0; j < c.side_; ++j) {
        const double amplitude = (side - 1.0 - 2.0 * j) * scale;
        const unsigned gray = j ^ (j >> 1);
        c.axis_levels_[j] = amplitude;
        c.axis_labels_[j] = gray;
        level_of_label[gray] = amplitude;
    }
    c.points_.resize(order);
    for (std::uint32_t index = 0; index < order; ++index) {
        const std::uint32_t in_phase = index >> half_bits;
        const std::uint32_t quadrature = index & ((1U << half_bits) - 1U);
        c.points_[index] = {level_of_label[in_phase], level_of_label[quadrature]};
    }
    return c;
}

std::uint32_t Constellation::map_bits(std::span<const std::uint8_t> bits) const
{
    if (bits.size() != bits_) {
        throw std::invalid_argument("map_bits: expected " + std::to_string(bits_) + " bits");
    }
    std::uint32_t index = 0;
    for (auto b : bits) {
        if (b > 1) {
            throw std::invalid_argument("map_bits: bits must be 0 or 1");
        }
        index = (index << 1) | b;
    }
    return index;
}

std::vector<std::uint8_t> Constellation::demap_symbol(std::uint32_t index) const
{
    if (index >= points_.size()) {
        throw std::invalid_argument("demap_symbol: index out of range");
    }
    std::vector<std::uint8_t> bits(bits_);
    for (unsigned k = 0; k < bits_; ++k) {
        bits[k] = static_cast<std::uint8_t>(bit(index, k));
    }
    return bits;
}

std::string Constellation::label_string(std::uint32_t index) const
{
    std::string s;
    for (auto b : demap_symbol(index)) {
        s += static_cast<char>('0' + b);
    }
    return s;
}

std::uint32_t Constellation::nearest(cplx y, double scale) const
{
    std::uint32_t best = 0;
    double best_d = std::norm(y - scale * points_[0]);
    for (std::uint32_t i = 1; i < points_.size(); ++i) {
        const double d = std::norm(y - scale * points_[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::uint32_t Constellation::slice_axis(double y, double scale) const
{
    const double t = (static_cast<double>(side_) - 1.0 - y / (scale * step_)) / 2.0;
    const double lo = std::clamp(std::floor(t), 0.0, static_cast<double>(side_) - 2.0);
    const auto j = static_cast<std::size_t>(lo);
    const double d0 = y - scale * axis_levels_[j];
    const double d1 = y - scale * axis_levels_[j + 1];
    const double e0 = d0 * d0;
    const double e1 = d1 * d1;
    if (e0 < e1) {
        return axis_labels_[j];
    }
    if (e1 < e0) {
        return axis_labels_[j + 1];
    }
    return std::min(axis_labels_[j], axis_labels_[j + 1]);
}

std::uint32_t Constellation::slice(cplx y, double scale) const
{
    const unsigned half = bits_ / 2;
    return (slice_axis(y.real(), scale) << half) | slice_axis(y.imag(), scale);
}

std::string Constellation::descriptor() const
{
    return nlohmann::json{{"format", "qam"}, {"order", order()}, {"es", es_}}.dump();
}

}  // namespace rotsim
