#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rotsim {

using cplx = std::complex<double>;

/// Gray-labeled square QAM normalized to average symbol energy Es.
///
/// The symbol index *is* the label: index i carries the m-bit label whose
/// binary expansion (MSB first) is i. The first m/2 bits select the in-phase
/// level and the last m/2 the quadrature level, each through a reflected
/// Gray code counted from the most positive level downward, so label 0...0
/// is the upper-right corner point (first quadrant).
class Constellation {
public:
    static Constellation square_qam(unsigned order, double es = 1.0);

    [[nodiscard]] unsigned order() const { return static_cast<unsigned>(points_.size()); }
    [[nodiscard]] unsigned bits_per_symbol() const { return bits_; }
    [[nodiscard]] double es() const { return es_; }
    [[nodiscard]] std::span<const cplx> points() const { return points_; }
    [[nodiscard]] cplx point(std::uint32_t index) const { return points_[index]; }

    // Bit k (0 = MSB) of the label of `index`.
    [[nodiscard]] unsigned bit(std::uint32_t index, unsigned k) const
    {
        return (index >> (bits_ - 1 - k)) & 1U;
    }

    // Per-axis PAM: `side()` levels, amplitude of axis level j, and the
    // axis label of level j (m/2 bits).
    [[nodiscard]] unsigned side() const { return side_; }
    [[nodiscard]] std::span<const double> axis_levels() const { return axis_levels_; }
    [[nodiscard]] std::span<const std::uint32_t> axis_labels() const { return axis_labels_; }

    // Index of the point carrying `bits` (one 0/1 byte per bit, MSB first).
    [[nodiscard]] std::uint32_t map_bits(std::span<const std::uint8_t> bits) const;
    [[nodiscard]] std::vector<std::uint8_t> demap_symbol(std::uint32_t index) const;
    [[nodiscard]] std::string label_string(std::uint32_t index) const;

    // Nearest point to `y` among scale * X; ties go to the lowest index.
    [[nodiscard]] std::uint32_t nearest(cplx y, double scale = 1.0) const;

    // Same decision, one axis at a time (O(1) instead of O(M)).
    [[nodiscard]] std::uint32_t slice(cplx y, double scale = 1.0) const;

    // Textual descriptor {"format": "qam", "order": M, "es": Es}.
    [[nodiscard]] std::string descriptor() const;

private:
    Constellation() = default;

    [[nodiscard]] std::uint32_t slice_axis(double y, double scale) const;

    std::vector<cplx> points_;
    std::vector<double> axis_levels_;
    std::vector<std::uint32_t> axis_labels_;
    unsigned bits_ = 0;
    unsigned side_ = 0;
    double step_ = 1.0;  // amplitude of the innermost level
    double es_ = 1.0;
};

}  // namespace rotsim
