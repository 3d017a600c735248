#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotsim {

using cplx = std::complex<double>;

class Stream;

// Free Givens angles of a 4D rotation, radians, canonicalized to [-pi, pi).
// The two per-channel phase-shift planes (1-2 and 3-4) are fixed to zero.
class GivensAngles4D {
public:
    GivensAngles4D() = default;
    GivensAngles4D(double phi3, double phi4, double phi5, double phi6);
    explicit GivensAngles4D(const std::array<double, 4>& phi)
        : GivensAngles4D(phi[0], phi[1], phi[2], phi[3])
    {
    }

    [[nodiscard]] const std::array<double, 4>& values() const { return phi_; }
    [[nodiscard]] double operator[](std::size_t i) const { return phi_[i]; }

    friend bool operator==(const GivensAngles4D&, const GivensAngles4D&) = default;

private:
    std::array<double, 4> phi_{};
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double phi);

enum class RecipeKind { identity, hadamard, givens4, dft, random, ser4, explicit_matrix };

// Which signal basis a recipe acts on. A complex-basis recipe of size N is
// applied to the complex symbols directly, i.e. as M (x) I_2 on the
// interleaved real components.
enum class Basis { real, complex };

/// Construction descriptor of a rotation.
///
/// Text form (used in plan files), one of
///   identity | hadamard | hadamard/complex | ser4 | dft
///   givens4(p3, p4, p5, p6) | random(seed) | random/complex(seed)
///   explicit(dim; e11, e12, ...)
/// The JSON form is {"kind": ..., "basis": ..., "order": ..., "angles": [...],
/// "seed": ..., "entries": [...]} with only the applicable keys present.
struct RotationRecipe {
    RecipeKind kind = RecipeKind::identity;
    Basis basis = Basis::real;
    // Matrix order in the recipe's own basis; 0 means "derive from N".
    std::size_t order = 0;
    GivensAngles4D angles{};
    std::uint64_t seed = 0;
    std::vector<double> entries;  // explicit only, row-major

    static RotationRecipe identity() { return {}; }
    static RotationRecipe of_kind(RecipeKind kind)
    {
        RotationRecipe r;
        r.kind = kind;
        return r;
    }
    static RotationRecipe hadamard(Basis basis = Basis::real);
    static RotationRecipe givens4(const GivensAngles4D& angles);
    static RotationRecipe ser4();
    static RotationRecipe dft();
    static RotationRecipe random(std::uint64_t seed, Basis basis = Basis::real);
    static RotationRecipe explicit_matrix(std::size_t dim, std::vector<double> entries);

    [[nodiscard]] std::string to_text() const;
    [[nodiscard]] std::string to_json() const;
    static RotationRecipe parse_text(std::string_view text);
    static RotationRecipe parse_json(std::string_view text);

    friend bool operator==(const RotationRecipe&, const RotationRecipe&) = default;
};

/// Real orthogonal matrix with determinant +1, stored row-major.
///
/// Construction validates R^T R = I and det(R) = +1 (to 1e-9) and throws
/// std::invalid_argument otherwise.
class RotationMatrix {
public:
    static constexpr double validation_tolerance = 1e-9;

    RotationMatrix(std::size_t dim, std::vector<double> entries,
                   RotationRecipe recipe = RotationRecipe::of_kind(RecipeKind::explicit_matrix));

    static RotationMatrix identity(std::size_t dim);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] double operator()(std::size_t row, std::size_t col) const
    {
        return entries_[row * dim_ + col];
    }
    [[nodiscard]] std::span<const double> entries() const { return entries_; }
    [[nodiscard]] const RotationRecipe& recipe() const { return recipe_; }

    [[nodiscard]] RotationMatrix transpose() const;
    // Largest entrywise deviation of R^T R from the identity.
    [[nodiscard]] double orthogonality_error() const;
    [[nodiscard]] double determinant() const;

    friend RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b);

private:
    struct Unchecked {};
    RotationMatrix(Unchecked, std::size_t dim, std::vector<double> entries,
                   RotationRecipe recipe);

    std::size_t dim_;
    std::vector<double> entries_;
    RotationRecipe recipe_;

    friend RotationMatrix kron(const RotationMatrix& a, const RotationMatrix& b);
};

// Kronecker product a (x) b.
RotationMatrix kron(const RotationMatrix& a, const RotationMatrix& b);

// Largest absolute entrywise difference; dimensions must agree.
double max_abs_difference(const RotationMatrix& a, const RotationMatrix& b);

/// Complex N x N matrix, row-major.
struct ComplexMatrix {
    std::size_t n = 0;
    std::vector<cplx> entries;

    [[nodiscard]] cplx operator()(std::size_t row, std::size_t col) const
    {
        return entries[row * n + col];
    }
};

bool is_power_of_two(std::size_t n);

// Hadamard rotation of order 2^l: H_1 = 1, H_2 = [[1, 1], [-1, 1]] / sqrt(2),
// H_{2^l} = H_2 (x) H_{2^(l-1)}. H_2 has its columns swapped relative to the
// Walsh-Hadamard convention so that det = +1.
RotationMatrix hadamard_rotation(std::size_t order);

// Givens rotation in plane (i, k), 1-based, i < k <= dim: identity except
// [[cos, -sin], [sin, cos]] on rows/columns (i, k).
RotationMatrix givens(std::size_t dim, std::size_t i, std::size_t k, double phi);

// G24(phi3) G23(phi4) G14(phi5) G13(phi6).
RotationMatrix compose_4d(const GivensAngles4D& angles);

// The fixed 4D rotation with the best symbol error rate for the per-channel
// receiver: [[1,1,0,0],[0,0,1,1],[1,-1,0,0],[0,0,-1,1]] / sqrt(2).
RotationMatrix ser_rotation_4d();

// Haar-distributed rotation: QR of a Gaussian matrix with the sign of R's
// diagonal moved into Q; a reflection is repaired by swapping columns 1, 2.
RotationMatrix random_rotation(std::size_t dim, Stream& rng);

// Unitary DFT, entries exp(-2 pi j r c / N) / sqrt(N).
ComplexMatrix dft_rotation(std::size_t n);

// Real-component embedding of a unitary matrix under the interleaved
// ordering (Re1, Im1, Re2, Im2, ...); the result is a rotation.
RotationMatrix real_embedding(const ComplexMatrix& u, RotationRecipe recipe);

// f_R(s) = g^-1(R g(s)), g interleaving (Re, Im) per channel.
std::vector<cplx> apply_real(const RotationMatrix& r, std::span<const cplx> s);
void apply_real(const RotationMatrix& r, std::span<const cplx> s, std::span<cplx> out);

// H_N s by the in-place butterfly; N must be a power of two.
std::vector<cplx> complex_hadamard_apply(std::span<const cplx> s);
// In-place butterfly; transpose = true applies H_N^T.
void fast_hadamard(std::span<cplx> x, bool transpose = false);

// Largest entrywise |[prod_i G^{(2i-1)(2i)}(pi/4)] H_{2N} - H_N (x) I_2|.
double phase_align_identity_error(std::size_t n);
bool phase_align_identity_check(std::size_t n);

/// A rotation bound to N channels, with a fast path where one exists.
///
/// The dense 2N x 2N real matrix is always kept and is the ground truth;
/// complex-basis Hadamard recipes additionally run the butterfly.
class Precoder {
public:
    Precoder(const RotationRecipe& recipe, std::size_t channels);
    explicit Precoder(RotationMatrix matrix);

    [[nodiscard]] std::size_t channels() const { return channels_; }
    [[nodiscard]] const RotationMatrix& matrix() const { return matrix_; }
    [[nodiscard]] const RotationRecipe& recipe() const { return matrix_.recipe(); }
    [[nodiscard]] bool is_identity() const { return path_ == Path::identity; }

    // out = f_R(s). `out` may alias `s`.
    void forward(std::span<const cplx> s, std::span<cplx> out) const;
    // out = f_{R^T}(r). `out` may alias `r`.
    void inverse(std::span<const cplx> r, std::span<cplx> out) const;

private:
    enum class Path { identity, complex_hadamard, dense };

    RotationMatrix matrix_;
    RotationMatrix transposed_;
    std::size_t channels_;
    Path path_;
};

}  // namespace rotsim
