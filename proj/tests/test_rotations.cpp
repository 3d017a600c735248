#include "rotsim/optimizer.hpp"
#include "rotsim/rng.hpp"
#include "rotsim/rotations.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rotsim;

namespace {
const double h = 1.0 / std::numbers::sqrt2;
}

TEST_CASE("hadamard: literal H2 and H4")
{
    const RotationMatrix h2 = hadamard_rotation(2);
    CHECK(h2(0, 0) == doctest::Approx(h));
    CHECK(h2(0, 1) == doctest::Approx(h));
    CHECK(h2(1, 0) == doctest::Approx(-h));
    CHECK(h2(1, 1) == doctest::Approx(h));

    const RotationMatrix h4 = hadamard_rotation(4);
    const double lit[4][4] = {
        {0.5, 0.5, 0.5, 0.5}, {-0.5, 0.5, -0.5, 0.5}, {-0.5, -0.5, 0.5, 0.5}, {0.5, -0.5, -0.5, 0.5}};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            CHECK(h4(r, c) == doctest::Approx(lit[r][c]).epsilon(1e-15));
        }
    }
    CHECK(h4.determinant() == doctest::Approx(1.0));
    CHECK_THROWS(hadamard_rotation(6));
}

TEST_CASE("hadamard: applied to one complex symbol pair")
{
    // s = (1, 0) is the real vector (1, 0, 0, 0); H4 picks out column 0.
    const std::vector<cplx> s{{1.0, 0.0}, {0.0, 0.0}};
    const auto out = apply_real(hadamard_rotation(4), s);
    CHECK(std::abs(out[0] - cplx(0.5, -0.5)) < 1e-15);
    CHECK(std::abs(out[1] - cplx(-0.5, 0.5)) < 1e-15);
    // (1, j) maps onto itself.
    const std::vector<cplx> t{{1.0, 0.0}, {0.0, 1.0}};
    const auto back = apply_real(hadamard_rotation(4), t);
    CHECK(std::abs(back[0] - t[0]) < 1e-15);
    CHECK(std::abs(back[1] - t[1]) < 1e-15);
}

TEST_CASE("hadamard: complex butterfly equals H_N (x) I_2, both directions")
{
    Stream rng(31);
    for (std::size_t n : {2, 8, 64}) {
        std::vector<cplx> s(n);
        for (auto& v : s) {
            v = rng.complex_normal(1.0);
        }
        const RotationMatrix dense = kron(hadamard_rotation(n), RotationMatrix::identity(2));
        auto fast = s;
        fast_hadamard(fast);
        const auto ref = apply_real(dense, s);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(fast[i] - ref[i]) < 1e-12);
        }
        fast_hadamard(fast, true);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(fast[i] - s[i]) < 1e-12);
        }
    }
}

TEST_CASE("hadamard: real precoder equals the dense 2N matrix")
{
    Stream rng(32);
    for (std::size_t n : {2, 8, 64}) {
        const Precoder p(RotationRecipe::hadamard(), n);
        std::vector<cplx> s(n), tx(n);
        for (auto& v : s) {
            v = rng.complex_normal(1.0);
        }
        p.forward(s, tx);
        const auto ref = apply_real(hadamard_rotation(2 * n), s);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(tx[i] - ref[i]) < 1e-12);
        }
    }
}

TEST_CASE("hadamard: phase-align identity holds")
{
    for (std::size_t n : {2, 4, 8, 32}) {
        CHECK(phase_align_identity_error(n) < 1e-12);
        CHECK(phase_align_identity_check(n));
    }
}

TEST_CASE("givens: sign convention and composition")
{
    const double phi = 0.3;
    // 1-based plane indices.
    const RotationMatrix g = givens(4, 1, 3, phi);
    CHECK(g(0, 0) == doctest::Approx(std::cos(phi)));
    CHECK(g(0, 2) == doctest::Approx(-std::sin(phi)));
    CHECK(g(2, 0) == doctest::Approx(std::sin(phi)));
    CHECK(g(2, 2) == doctest::Approx(std::cos(phi)));
    CHECK(g(1, 1) == 1.0);
    CHECK(g(3, 3) == 1.0);

    CHECK(max_abs_difference(compose_4d({0, 0, 0, 0}), RotationMatrix::identity(4)) == 0.0);
    const GivensAngles4D a(0.4, -1.1, 2.2, 0.9);
    const RotationMatrix r = compose_4d(a);
    CHECK(r.orthogonality_error() < 1e-14);
    CHECK(r.determinant() == doctest::Approx(1.0));
}

TEST_CASE("givens: H4 is reachable up to per-channel phase shifts only")
{
    const AngleFit gauged = fit_givens_angles(hadamard_rotation(4));
    CHECK(gauged.residual < 1e-9);
    CHECK(max_abs_difference(gauged.matrix(), hadamard_rotation(4)) < 1e-9);
    const AngleFit plain = fit_givens_angles(hadamard_rotation(4), false);
    CHECK(plain.residual > 0.1);
}

TEST_CASE("R_SER: entries and orientation")
{
    const RotationMatrix r = ser_rotation_4d();
    CHECK(r(0, 0) == doctest::Approx(h));
    CHECK(r(2, 1) == doctest::Approx(-h));
    CHECK(r(3, 2) == doctest::Approx(-h));
    CHECK(r(1, 0) == 0.0);
    CHECK(r.determinant() == doctest::Approx(1.0));
}

TEST_CASE("random rotation: proper, orthogonal, reproducible, unbiased")
{
    Stream a(5), b(5);
    const RotationMatrix ra = random_rotation(6, a);
    const RotationMatrix rb = random_rotation(6, b);
    CHECK(max_abs_difference(ra, rb) == 0.0);
    CHECK(ra.orthogonality_error() < 1e-12);
    CHECK(ra.determinant() == doctest::Approx(1.0));

    // Haar: every entry has mean 0 and second moment 1/d.
    Stream rng(9);
    const int draws = 4000;
    double mean = 0.0;
    double second = 0.0;
    for (int t = 0; t < draws; ++t) {
        const RotationMatrix r = random_rotation(4, rng);
        CHECK(r.determinant() > 0.0);
        mean += r(1, 2);
        second += r(1, 2) * r(1, 2);
    }
    mean /= draws;
    second /= draws;
    CHECK(std::abs(mean) < 4.0 * 0.5 / std::sqrt(draws));
    CHECK(second == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("dft: unitary, embedding is a rotation")
{
    for (std::size_t n : {2, 3, 4, 8}) {
        const ComplexMatrix f = dft_rotation(n);
        double worst = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                cplx dot = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    dot += f(r, k) * std::conj(f(c, k));
                }
                worst = std::max(worst, std::abs(dot - (r == c ? 1.0 : 0.0)));
            }
        }
        CHECK(worst < 1e-12);
        const RotationMatrix e = real_embedding(f, RotationRecipe::dft());
        CHECK(e.dim() == 2 * n);
        CHECK(e.orthogonality_error() < 1e-12);
        CHECK(e.determinant() == doctest::Approx(1.0));
    }
}

TEST_CASE("precoder: forward then inverse is the identity")
{
    Stream rng(17);
    for (const auto& recipe : {RotationRecipe::identity(), RotationRecipe::hadamard(), RotationRecipe::ser4(),
                               RotationRecipe::givens4({0.1, 0.2, 0.3, 0.4}), RotationRecipe::dft(),
                               RotationRecipe::random(3), RotationRecipe::hadamard(Basis::complex)}) {
        const Precoder p(recipe, 2);
        std::vector<cplx> s(2), tx(2), back(2);
        for (auto& v : s) {
            v = rng.complex_normal(1.0);
        }
        p.forward(s, tx);
        p.inverse(tx, back);
        CHECK(std::abs(back[0] - s[0]) < 1e-12);
        CHECK(std::abs(back[1] - s[1]) < 1e-12);
        CHECK(std::norm(tx[0]) + std::norm(tx[1]) == doctest::Approx(std::norm(s[0]) + std::norm(s[1])));
    }
}

TEST_CASE("recipe: text and json round trip")
{
    for (const auto& recipe : {RotationRecipe::identity(), RotationRecipe::hadamard(), RotationRecipe::ser4(),
                               RotationRecipe::givens4({0.1, -0.2, 3.0, 0.4}), RotationRecipe::random(42)}) {
        const auto t = RotationRecipe::parse_text(recipe.to_text());
        CHECK(t.to_text() == recipe.to_text());
        const auto j = RotationRecipe::parse_json(recipe.to_json());
        CHECK(j.to_text() == recipe.to_text());
        CHECK(max_abs_difference(Precoder(t, 2).matrix(), Precoder(recipe, 2).matrix()) == 0.0);
    }
    CHECK_THROWS(RotationRecipe::parse_text("spiral(3)"));
    CHECK_THROWS(RotationRecipe::parse_text("hadamard(complex)"));
    CHECK(RotationRecipe::parse_text("hadamard/complex").basis == Basis::complex);
}
