#include "rotsim/rotations.hpp"

#include "rotsim/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rotsim {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> as_eigen(const RotationMatrix& r)
{
    const auto dim = static_cast<Eigen::Index>(r.dim());
    return {r.entries().data(), dim, dim};
}

std::vector<double> to_vector(const RowMajor& m)
{
    return {m.data(), m.data() + m.size()};
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double(std::string_view s)
{
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("rotation recipe: bad number '" + std::string(s) + "'");
    }
    return v;
}

std::uint64_t parse_u64(std::string_view s)
{
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("rotation recipe: bad integer '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return parts;
}

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const char* kind_name(RecipeKind kind)
{
    switch (kind) {
    case RecipeKind::identity: return "identity";
    case RecipeKind::hadamard: return "hadamard";
    case RecipeKind::givens4: return "givens4";
    case RecipeKind::dft: return "dft";
    case RecipeKind::random: return "random";
    case RecipeKind::ser4: return "ser4";
    case RecipeKind::explicit_matrix: return "explicit";
    }
    return "?";
}

RecipeKind kind_from_name(std::string_view name)
{
    for (auto kind : {RecipeKind::identity, RecipeKind::hadamard, RecipeKind::givens4,
                      RecipeKind::dft, RecipeKind::random, RecipeKind::ser4,
                      RecipeKind::explicit_matrix}) {
        if (name == kind_name(kind)) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown rotation kind '" + std::string(name) + "'");
}

}  // namespace

double wrap_angle(double phi)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(phi + std::numbers::pi, two_pi);
    if (w < 0.0) {
        w += two_pi;
    }
    w -= std::numbers::pi;
    // fmod rounding can land exactly on +pi.
    return w >= std::numbers::pi ? -std::numbers::pi : w;
}

GivensAngles4D::GivensAngles4D(double phi3, double phi4, double phi5, double phi6)
    : phi_{wrap_angle(phi3), wrap_angle(phi4), wrap_angle(phi5), wrap_angle(phi6)}
{
}

// ---------------------------------------------------------------------------
// Recipes

RotationRecipe RotationRecipe::hadamard(Basis basis)
{
    RotationRecipe r;
    r.kind = RecipeKind::hadamard;
    r.basis = basis;
    return r;
}

RotationRecipe RotationRecipe::givens4(const GivensAngles4D& angles)
{
    RotationRecipe r;
    r.kind = RecipeKind::givens4;
    r.order = 4;
    r.angles = angles;
    return r;
}

RotationRecipe RotationRecipe::ser4()
{
    RotationRecipe r;
    r.kind = RecipeKind::ser4;
    r.order = 4;
    return r;
}

RotationRecipe RotationRecipe::dft()
{
    RotationRecipe r;
    r.kind = RecipeKind::dft;
    r.basis = Basis::complex;
    return r;
}

RotationRecipe RotationRecipe::random(std::uint64_t seed, Basis basis)
{
    RotationRecipe r;
    r.kind = RecipeKind::random;
    r.basis = basis;
    r.seed = seed;
    return r;
}

RotationRecipe RotationRecipe::explicit_matrix(std::size_t dim, std::vector<double> entries)
{
    if (entries.size() != dim * dim) {
        throw std::invalid_argument("explicit rotation: entry count does not match dimension");
    }
    RotationRecipe r;
    r.kind = RecipeKind::explicit_matrix;
    r.order = dim;
    r.entries = std::move(entries);
    return r;
}

std::string RotationRecipe::to_text() const
{
    std::string out = kind_name(kind);
    switch (kind) {
    case RecipeKind::identity:
    case RecipeKind::ser4:
    case RecipeKind::dft:
        break;
    case RecipeKind::hadamard:
        if (basis == Basis::complex) {
            out += "/complex";
        }
        break;
    case RecipeKind::givens4:
        out += "(";
        for (std::size_t i = 0; i < 4; ++i) {
            out += (i ? ", " : "") + format_double(angles[i]);
        }
        out += ")";
        break;
    case RecipeKind::random:
        if (basis == Basis::complex) {
            out += "/complex";
        }
        out += "(" + std::to_string(seed) + ")";
        break;
    case RecipeKind::explicit_matrix:
        out += "(" + std::to_string(order) + ";";
        for (std::size_t i = 0; i < entries.size(); ++i) {
            out += (i ? ", " : " ") + format_double(entries[i]);
        }
        out += ")";
        break;
    }
    return out;
}

RotationRecipe RotationRecipe::parse_text(std::string_view text)
{
    text = trim(text);
    std::string_view head = text;
    std::string_view args;
    if (auto open = text.find('('); open != std::string_view::npos) {
        if (text.back() != ')') {
            throw std::invalid_argument("rotation recipe: missing ')' in '" + std::string(text) + "'");
        }
        head = trim(text.substr(0, open));
        args = text.substr(open + 1, text.size() - open - 2);
    }
    Basis basis = Basis::real;
    if (auto slash = head.find('/'); slash != std::string_view::npos) {
        const auto b = trim(head.substr(slash + 1));
        if (b == "complex") {
            basis = Basis::complex;
        } else if (b != "real") {
            throw std::invalid_argument("rotation recipe: unknown basis '" + std::string(b) + "'");
        }
        head = trim(head.substr(0, slash));
    }
    const RecipeKind kind = kind_from_name(head);
    const bool takes_args = kind == RecipeKind::givens4 || kind == RecipeKind::random
                            || kind == RecipeKind::explicit_matrix;
    if (!takes_args && !trim(args).empty()) {
        throw std::invalid_argument("rotation recipe: '" + std::string(head) + "' takes no arguments");
    }
    switch (kind) {
    case RecipeKind::identity:
        return identity();
    case RecipeKind::hadamard:
        return hadamard(basis);
    case RecipeKind::ser4:
        return ser4();
    case RecipeKind::dft:
        return dft();
    case RecipeKind::givens4: {
        const auto parts = split(args, ',');
        if (parts.size() != 4) {
            throw std::invalid_argument("givens4 recipe needs exactly four angles");
        }
        return givens4({parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2]),
                        parse_double(parts[3])});
    }
    case RecipeKind::random:
        if (args.empty()) {
            throw std::invalid_argument("random recipe needs a seed");
        }
        return random(parse_u64(args), basis);
    case RecipeKind::explicit_matrix: {
        const auto semi = args.find(';');
        if (semi == std::string_view::npos) {
            throw std::invalid_argument("explicit recipe: expected 'dim; entries'");
        }
        const auto dim = static_cast<std::size_t>(parse_u64(args.substr(0, semi)));
        std::vector<double> entries;
        for (auto part : split(args.substr(semi + 1), ',')) {
            entries.push_back(parse_double(part));
        }
        return explicit_matrix(dim, std::move(entries));
    }
    }
    throw std::invalid_argument("rotation recipe: unhandled kind");
}

std::string RotationRecipe::to_json() const
{
    nlohmann::json j;
    j["kind"] = kind_name(kind);
    switch (kind) {
    case RecipeKind::hadamard:
    case RecipeKind::random:
        j["basis"] = basis == Basis::complex ? "complex" : "real";
        break;
    default:
        break;
    }
    if (order != 0) {
        j["order"] = order;
    }
    if (kind == RecipeKind::givens4) {
        j["angles"] = angles.values();
    }
    if (kind == RecipeKind::random) {
        j["seed"] = seed;
    }
    if (kind == RecipeKind::explicit_matrix) {
        j["entries"] = entries;
    }
    return j.dump();
}

RotationRecipe RotationRecipe::parse_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("rotation descriptor: ") + e.what());
    }
    RotationRecipe r;
    r.kind = kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("basis")) {
        const auto b = j["basis"].get<std::string>();
        if (b != "real" && b != "complex") {
            throw std::invalid_argument("rotation descriptor: unknown basis '" + b + "'");
        }
        r.basis = b == "complex" ? Basis::complex : Basis::real;
    } else if (r.kind == RecipeKind::dft) {
        r.basis = Basis::complex;
    }
    r.order = j.value("order", std::size_t{0});
    if (r.kind == RecipeKind::givens4) {
        r.angles = GivensAngles4D(j.at("angles").get<std::array<double, 4>>());
        r.order = 4;
    }
    if (r.kind == RecipeKind::ser4) {
        r.order = 4;
    }
    if (r.kind == RecipeKind::random) {
        r.seed = j.at("seed").get<std::uint64_t>();
    }
    if (r.kind == RecipeKind::explicit_matrix) {
        r.entries = j.at("entries").get<std::vector<double>>();
        if (r.order * r.order != r.entries.size()) {
            throw std::invalid_argument("explicit rotation: entry count does not match order");
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Dense matrices

RotationMatrix::RotationMatrix(Unchecked, std::size_t dim, std::vector<double> entries,
                               RotationRecipe recipe)
    : dim_(dim), entries_(std::move(entries)), recipe_(std::move(recipe))
{
}

RotationMatrix::RotationMatrix(std::size_t dim, std::vector<double> entries, RotationRecipe recipe)
    : RotationMatrix(Unchecked{}, dim, std::move(entries), std::move(recipe))
{
    if (dim_ == 0 || entries_.size() != dim_ * dim_) {
        throw std::invalid_argument("rotation matrix: entry count must be dim*dim with dim >= 1");
    }
    if (orthogonality_error() > validation_tolerance) {
        throw std::invalid_argument("rotation matrix: not orthogonal");
    }
    if (std::abs(determinant() - 1.0) > validation_tolerance) {
        throw std::invalid_argument("rotation matrix: determinant is not +1");
    }
}

RotationMatrix RotationMatrix::identity(std::size_t dim)
{
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        e[i * dim + i] = 1.0;
    }
    RotationRecipe recipe;
    recipe.order = dim;
    return {Unchecked{}, dim, std::move(e), recipe};
}

RotationMatrix RotationMatrix::transpose() const
{
    std::vector<double> t(entries_.size());
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
            t[c * dim_ + r] = entries_[r * dim_ + c];
        }
    }
    return {Unchecked{}, dim_, std::move(t), RotationRecipe::of_kind(RecipeKind::explicit_matrix)};
}

double RotationMatrix::orthogonality_error() const
{
    const auto m = as_eigen(*this);
    const RowMajor gram = m.transpose() * m;
    return (gram - RowMajor::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double RotationMatrix::determinant() const
{
    return as_eigen(*this).determinant();
}

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b)
{
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("rotation product: dimension mismatch");
    }
    const RowMajor p = as_eigen(a) * as_eigen(b);
    return {RotationMatrix::Unchecked{}, a.dim(), to_vector(p),
            RotationRecipe::of_kind(RecipeKind::explicit_matrix)};
}

RotationMatrix kron(const RotationMatrix& a, const RotationMatrix& b)
{
    const std::size_t n = a.dim() * b.dim();
    std::vector<double> e(n * n);
    for (std::size_t ar = 0; ar < a.dim(); ++ar) {
        for (std::size_t ac = 0; ac < a.dim(); ++ac) {
            const double s = a(ar, ac);
            for (std::size_t br = 0; br < b.dim(); ++br) {
                for (std::size_t bc = 0; bc < b.dim(); ++bc) {
                    e[(ar * b.dim() + br) * n + ac * b.dim() + bc] = s * b(br, bc);
                }
            }
        }
    }
    return {RotationMatrix::Unchecked{}, n, std::move(e), RotationRecipe::of_kind(RecipeKind::explicit_matrix)};
}

double max_abs_difference(const RotationMatrix& a, const RotationMatrix& b)
{
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("matrix difference: dimension mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Constructors

bool is_power_of_two(std::size_t n)
{
    return n != 0 && (n & (n - 1)) == 0;
}

RotationMatrix hadamard_rotation(std::size_t order)
{
    if (!is_power_of_two(order)) {
        throw std::invalid_argument("hadamard_rotation: order must be a power of two");
    }
    const double h = 1.0 / std::numbers::sqrt2;
    const RotationMatrix h2(2, {h, h, -h, h});
    RotationMatrix result = RotationMatrix::identity(1);
    for (std::size_t n = 1; n < order; n *= 2) {
        result = kron(h2, result);
    }
    RotationRecipe recipe = RotationRecipe::hadamard();
    recipe.order = order;
    return {order, std::vector<double>(result.entries().begin(), result.entries().end()), recipe};
}

RotationMatrix givens(std::size_t dim, std::size_t i, std::size_t k, double phi)
{
    if (i < 1 || i >= k || k > dim) {
        throw std::invalid_argument("givens: need 1 <= i < k <= dim");
    }
    RotationMatrix g = RotationMatrix::identity(dim);
    std::vector<double> e(g.entries().begin(), g.entries().end());
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    --i;
    --k;
    e[i * dim + i] = c;
    e[i * dim + k] = -s;
    e[k * dim + i] = s;
    e[k * dim + k] = c;
    return {dim, std::move(e), RotationRecipe::of_kind(RecipeKind::explicit_matrix)};
}

RotationMatrix compose_4d(const GivensAngles4D& angles)
{
    const RotationMatrix product = givens(4, 2, 4, angles[0]) * givens(4, 2, 3, angles[1])
                                   * givens(4, 1, 4, angles[2]) * givens(4, 1, 3, angles[3]);
    return {4, std::vector<double>(product.entries().begin(), product.entries().end()),
            RotationRecipe::givens4(angles)};
}

RotationMatrix ser_rotation_4d()
{
    const double h = 1.0 / std::numbers::sqrt2;
    return {4,
            {h, h, 0, 0,  //
             0, 0, h, h,  //
             h, -h, 0, 0, //
             0, 0, -h, h},
            RotationRecipe::ser4()};
}

RotationMatrix random_rotation(std::size_t dim, Stream& rng)
{
    if (dim == 0) {
        throw std::invalid_argument("random_rotation: dim must be >= 1");
    }
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd z(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            z(r, c) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd upper = qr.matrixQR();
    for (Eigen::Index c = 0; c < n; ++c) {
        if (upper(c, c) < 0.0) {
            q.col(c) = -q.col(c);
        }
    }
    if (dim >= 2 && q.determinant() < 0.0) {
        q.col(0).swap(q.col(1));
    } else if (dim == 1 && q(0, 0) < 0.0) {
        q(0, 0) = 1.0;
    }
    const RowMajor rm = q;
    RotationRecipe recipe = RotationRecipe::random(0);
    recipe.order = dim;
    recipe.seed = 0;  // the caller's stream is the provenance
    return {dim, to_vector(rm), recipe};
}

ComplexMatrix dft_rotation(std::size_t n)
{
    if (n == 0) {
        throw std::invalid_argument("dft_rotation: N must be >= 1");
    }
    ComplexMatrix f{n, std::vector<cplx>(n * n)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            // Reduce the exponent first so large N keeps full accuracy.
            const auto k = static_cast<double>((r * c) % n);
            const double angle = -2.0 * std::numbers::pi * k / static_cast<double>(n);
            f.entries[r * n + c] = std::polar(scale, angle);
        }
    }
    return f;
}

RotationMatrix real_embedding(const ComplexMatrix& u, RotationRecipe recipe)
{
    const std::size_t dim = 2 * u.n;
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t r = 0; r < u.n; ++r) {
        for (std::size_t c = 0; c < u.n; ++c) {
            const cplx v = u(r, c);
            e[(2 * r) * dim + 2 * c] = v.real();
            e[(2 * r) * dim + 2 * c + 1] = -v.imag();
            e[(2 * r + 1) * dim + 2 * c] = v.imag();
            e[(2 * r + 1) * dim + 2 * c + 1] = v.real();
        }
    }
    return {dim, std::move(e), std::move(recipe)};
}

// ---------------------------------------------------------------------------
// Application

void apply_real(const RotationMatrix& r, std::span<const cplx> s, std::span<cplx> out)
{
    const std::size_t n = s.size();
    if (r.dim() != 2 * n || out.size() != n) {
        throw std::invalid_argument("apply_real: rotation dimension must be 2N");
    }
    // Read everything before writing so `out` may alias `s`.
    thread_local std::vector<double> x;
    x.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        x[2 * i] = s[i].real();
        x[2 * i + 1] = s[i].imag();
    }
    const double* row = r.entries().data();
    const std::size_t dim = 2 * n;
    for (std::size_t i = 0; i < n; ++i) {
        double re = 0.0;
        double im = 0.0;
        const double* row_re = row + (2 * i) * dim;
        const double* row_im = row_re + dim;
        for (std::size_t c = 0; c < dim; ++c) {
            re += row_re[c] * x[c];
            im += row_im[c] * x[c];
        }
        out[i] = {re, im};
    }
}

std::vector<cplx> apply_real(const RotationMatrix& r, std::span<const cplx> s)
{
    std::vector<cplx> out(s.size());
    apply_real(r, s, out);
    return out;
}

void fast_hadamard(std::span<cplx> x, bool transpose)
{
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("fast_hadamard: length must be a power of two");
    }
    // Each stage applies H_2 (or H_2^T) along one index bit.
    for (std::size_t h = 1; h < n; h *= 2) {
        for (std::size_t base = 0; base < n; base += 2 * h) {
            for (std::size_t j = base; j < base + h; ++j) {
                const cplx a = x[j];
                const cplx b = x[j + h];
                if (transpose) {
                    x[j] = a - b;
                    x[j + h] = a + b;
                } else {
                    x[j] = a + b;
                    x[j + h] = b - a;
                }
            }
        }
    }
    if (n > 1) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (auto& v : x) {
            v *= scale;
        }
    }
}

std::vector<cplx> complex_hadamard_apply(std::span<const cplx> s)
{
    std::vector<cplx> out(s.begin(), s.end());
    fast_hadamard(out);
    return out;
}

double phase_align_identity_error(std::size_t n)
{
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("phase_align_identity_check: N must be a power of two");
    }
    RotationMatrix lhs = hadamard_rotation(2 * n);
    for (std::size_t i = n; i >= 1; --i) {
        lhs = givens(2 * n, 2 * i - 1, 2 * i, std::numbers::pi / 4) * lhs;
    }
    const RotationMatrix rhs = kron(hadamard_rotation(n), RotationMatrix::identity(2));
    return max_abs_difference(lhs, rhs);
}

bool phase_align_identity_check(std::size_t n)
{
    return phase_align_identity_error(n) < 1e-12;
}

// ---------------------------------------------------------------------------
// Precoder

namespace {

RotationMatrix build_matrix(const RotationRecipe& recipe, std::size_t channels)
{
    if (channels == 0) {
        throw std::invalid_argument("precoder: channel count must be >= 1");
    }
    const std::size_t dim = 2 * channels;
    const std::size_t own = recipe.basis == Basis::complex ? channels : dim;
    if (recipe.order != 0 && recipe.order != own) {
        throw std::invalid_argument("precoder: recipe order " + std::to_string(recipe.order)
                                    + " does not fit " + std::to_string(channels) + " channels");
    }
    auto tag = [&](RotationMatrix m) {
        RotationRecipe r = recipe;
        return RotationMatrix(m.dim(), std::vector<double>(m.entries().begin(), m.entries().end()),
                              r);
    };
    switch (recipe.kind) {
    case RecipeKind::identity: {
        RotationMatrix m = RotationMatrix::identity(dim);
        return tag(m);
    }
    case RecipeKind::hadamard:
        if (recipe.basis == Basis::complex) {
            return tag(kron(hadamard_rotation(channels), RotationMatrix::identity(2)));
        }
        return tag(hadamard_rotation(dim));
    case RecipeKind::givens4:
        if (channels != 2) {
            throw std::invalid_argument("givens4 rotation needs exactly 2 channels");
        }
        return compose_4d(recipe.angles);
    case RecipeKind::ser4:
        if (channels != 2) {
            throw std::invalid_argument("ser4 rotation needs exactly 2 channels");
        }
        return ser_rotation_4d();
    case RecipeKind::dft:
        return real_embedding(dft_rotation(channels), recipe);
    case RecipeKind::random: {
        Stream rng(StreamKey{recipe.seed, 0, 0, SourceTag::rotation});
        if (recipe.basis == Basis::complex) {
            return tag(kron(random_rotation(channels, rng), RotationMatrix::identity(2)));
        }
        return tag(random_rotation(dim, rng));
    }
    case RecipeKind::explicit_matrix:
        if (recipe.order != dim) {
            throw std::invalid_argument("explicit rotation: order must equal 2N");
        }
        return RotationMatrix(dim, recipe.entries, recipe);
    }
    throw std::invalid_argument("precoder: unhandled recipe kind");
}

}  // namespace

Precoder::Precoder(const RotationRecipe& recipe, std::size_t channels)
    : Precoder(build_matrix(recipe, channels))
{
    if (recipe.kind == RecipeKind::identity) {
        path_ = Path::identity;
    } else if (recipe.kind == RecipeKind::hadamard && recipe.basis == Basis::complex) {
        path_ = Path::complex_hadamard;
    }
}

Precoder::Precoder(RotationMatrix matrix)
    : matrix_(std::move(matrix)),
      transposed_(matrix_.transpose()),
      channels_(matrix_.dim() / 2),
      path_(Path::dense)
{
    if (matrix_.dim() % 2 != 0) {
        throw std::invalid_argument("precoder: rotation dimension must be even");
    }
}

void Precoder::forward(std::span<const cplx> s, std::span<cplx> out) const
{
    if (s.size() != channels_ || out.size() != channels_) {
        throw std::invalid_argument("precoder: expected one symbol per channel");
    }
    switch (path_) {
    case Path::identity:
        std::copy(s.begin(), s.end(), out.begin());
        return;
    case Path::complex_hadamard:
        std::copy(s.begin(), s.end(), out.begin());
        fast_hadamard(out, false);
        return;
    case Path::dense:
        apply_real(matrix_, s, out);
        return;
    }
}

void Precoder::inverse(std::span<const cplx> r, std::span<cplx> out) const
{
    if (r.size() != channels_ || out.size() != channels_) {
        throw std::invalid_argument("precoder: expected one sample per channel");
    }
    switch (path_) {
    case Path::identity:
        std::copy(r.begin(), r.end(), out.begin());
        return;
    case Path::complex_hadamard:
        std::copy(r.begin(), r.end(), out.begin());
        fast_hadamard(out, true);
        return;
    case Path::dense:
        apply_real(transposed_, r, out);
        return;
    }
}

}  // namespace rotsim
