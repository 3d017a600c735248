#include "rotsim/receivers.hpp"

#include <algorithm>
#include <bit>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace rotsim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Lower bound on ln(x) for normal positive x: the exponent plus the
// mantissa fraction bounds log2 from below (log2(1 + f) >= f on [0, 1)).
inline double ln_lower_bound(double x)
{
    const auto bits = std::bit_cast<std::int64_t>(x);
    return std::numbers::ln2 * (static_cast<double>(bits) * 0x1.0p-52 - 1023.0);
}

inline double clamp_llr(double v)
{
    if (std::isnan(v)) {
        return 0.0;
    }
    return std::clamp(v, -llr_clamp, llr_clamp);
}

}  // namespace

// ---------------------------------------------------------------------------
// Joint detector

JointDetector::JointDetector(const Constellation& constellation, const Precoder& rotation,
                             const JointDetectorConfig& config)
    : constellation_(&constellation),
      rotation_(&rotation),
      channels_(rotation.channels()),
      candidates_(1),
      n0_(config.n0),
      inv_sigma2_(0.0),
      factorized_(rotation.is_identity())
{
    if (!(config.sigma2_p > 0.0)) {
        throw std::invalid_argument(
            "joint detector needs sigma2_p > 0; use the per-channel detector without phase noise");
    }
    if (!(config.n0 > 0.0)) {
        throw std::invalid_argument("joint detector: N0 must be positive");
    }
    inv_sigma2_ = 1.0 / config.sigma2_p;
    const std::size_t m = constellation.order();
    for (std::size_t i = 0; i < channels_; ++i) {
        if (candidates_ > config.enumeration_cap / m) {
            throw EnumerationRefused("joint detector: |X|^N = " + std::to_string(m) + "^"
                                     + std::to_string(channels_) + " exceeds the enumeration cap of "
                                     + std::to_string(config.enumeration_cap));
        }
        candidates_ *= m;
    }
    if (factorized_) {
        return;
    }
    tilde_re_.resize(channels_ * candidates_);
    tilde_im_.resize(channels_ * candidates_);
    energy_.resize(candidates_);
    std::vector<std::uint32_t> idx(channels_);
    std::vector<cplx> s(channels_);
    std::vector<cplx> tx(channels_);
    for (std::size_t c = 0; c < candidates_; ++c) {
        decode_candidate(c, idx);
        for (std::size_t i = 0; i < channels_; ++i) {
            s[i] = constellation.point(idx[i]);
        }
        rotation.forward(s, tx);
        double e = 0.0;
        for (std::size_t i = 0; i < channels_; ++i) {
            tilde_re_[i * candidates_ + c] = tx[i].real();
            tilde_im_[i * candidates_ + c] = tx[i].imag();
            e += std::norm(tx[i]);
        }
        energy_[c] = e / n0_;
    }
}

void JointDetector::decode_candidate(std::size_t candidate, std::span<std::uint32_t> s) const
{
    const std::size_t m = constellation_->order();
    for (std::size_t i = channels_; i-- > 0;) {
        s[i] = static_cast<std::uint32_t>(candidate % m);
        candidate /= m;
    }
}

double JointDetector::metric(std::span<const cplx> r, std::size_t candidate) const
{
    const double a = 2.0 / n0_;
    if (factorized_) {
        std::vector<std::uint32_t> idx(channels_);
        decode_candidate(candidate, idx);
        double total = 0.0;
        for (std::size_t i = 0; i < channels_; ++i) {
            const cplx x = constellation_->point(idx[i]);
            const double er = a * (r[i].real() * x.real() + r[i].imag() * x.imag()) + inv_sigma2_;
            const double ei = a * (r[i].imag() * x.real() - r[i].real() * x.imag());
            const double e2 = er * er + ei * ei;
            total += std::sqrt(e2) - 0.25 * std::log(e2) - std::norm(x) / n0_;
        }
        return total;
    }
    double total = -energy_[candidate];
    for (std::size_t i = 0; i < channels_; ++i) {
        const double tr = tilde_re_[i * candidates_ + candidate];
        const double ti = tilde_im_[i * candidates_ + candidate];
        const double er = a * (r[i].real() * tr + r[i].imag() * ti) + inv_sigma2_;
        const double ei = a * (r[i].imag() * tr - r[i].real() * ti);
        const double e2 = er * er + ei * ei;
        total += std::sqrt(e2) - 0.25 * std::log(e2);
    }
    return total;
}

std::size_t JointDetector::seed_candidate(std::span<const cplx> r) const
{
    std::vector<cplx> derotated(channels_);
    rotation_->inverse(r, derotated);
    std::size_t c = 0;
    for (std::size_t i = 0; i < channels_; ++i) {
        c = c * constellation_->order() + constellation_->nearest(derotated[i]);
    }
    return c;
}

void JointDetector::detect_factorized(std::span<const cplx> r, std::span<std::uint32_t> s_hat) const
{
    const double a = 2.0 / n0_;
    const auto points = constellation_->points();
    for (std::size_t i = 0; i < channels_; ++i) {
        double best = -inf;
        std::uint32_t best_idx = 0;
        for (std::uint32_t x = 0; x < points.size(); ++x) {
            const cplx p = points[x];
            const double er = a * (r[i].real() * p.real() + r[i].imag() * p.imag()) + inv_sigma2_;
            const double ei = a * (r[i].imag() * p.real() - r[i].real() * p.imag());
            const double e2 = er * er + ei * ei;
            const double v = std::sqrt(e2) - 0.25 * std::log(e2) - std::norm(p) / n0_;
            if (v > best) {
                best = v;
                best_idx = x;
            }
        }
        s_hat[i] = best_idx;
    }
}

void JointDetector::detect(std::span<const cplx> r, std::span<std::uint32_t> s_hat) const
{
    if (r.size() != channels_ || s_hat.size() != channels_) {
        throw std::invalid_argument("joint detector: expected one sample per channel");
    }
    if (factorized_) {
        detect_factorized(r, s_hat);
        return;
    }
    std::size_t best_idx = seed_candidate(r);
    double best = metric(r, best_idx);

    constexpr std::size_t tile = 256;
    double bound[tile];
    const double a = 2.0 / n0_;
    for (std::size_t start = 0; start < candidates_; start += tile) {
        const std::size_t len = std::min(tile, candidates_ - start);
        for (std::size_t j = 0; j < len; ++j) {
            bound[j] = -energy_[start + j];
        }
        for (std::size_t i = 0; i < channels_; ++i) {
            const double rr = r[i].real();
            const double ri = r[i].imag();
            const double* tre = tilde_re_.data() + i * candidates_ + start;
            const double* tim = tilde_im_.data() + i * candidates_ + start;
            for (std::size_t j = 0; j < len; ++j) {
                const double er = a * (rr * tre[j] + ri * tim[j]) + inv_sigma2_;
                const double ei = a * (ri * tre[j] - rr * tim[j]);
                const double e2 = er * er + ei * ei;
                const double log_term = e2 >= DBL_MIN ? ln_lower_bound(e2) : -inf;
                bound[j] += std::sqrt(e2) - 0.25 * log_term;
            }
        }
        // Slack covers rounding differences between the bound and the metric.
        const double threshold = best - 1e-9 * (1.0 + std::abs(best));
        for (std::size_t j = 0; j < len; ++j) {
            if (bound[j] < threshold) {
                continue;
            }
            const std::size_t c = start + j;
            const double v = metric(r, c);
            if (v > best || (v == best && c < best_idx)) {
                best = v;
                best_idx = c;
            }
        }
    }
    decode_candidate(best_idx, s_hat);
}

std::vector<std::uint32_t> JointDetector::detect(std::span<const cplx> r) const
{
    std::vector<std::uint32_t> s_hat(channels_);
    detect(r, s_hat);
    return s_hat;
}

// ---------------------------------------------------------------------------
// Exact posterior

namespace {

thread_local QuadratureResult quadrature_quality{};

struct SimpsonState {
    double abs_tol;
    int max_depth;
    double error_sum = 0.0;
    bool converged = true;
};

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth, SimpsonState& st)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) {
        st.error_sum += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    if (depth >= st.max_depth) {
        st.converged = false;
        st.error_sum += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, st)
           + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, st);
}

}  // namespace

QuadratureResult log_phase_integral(cplx r, cplx s_tilde, double n0, double sigma2_p,
                                    double rel_tol)
{
    if (!(sigma2_p > 0.0) || !(n0 > 0.0)) {
        throw std::invalid_argument("phase integral: N0 and sigma2_p must be positive");
    }
    const double sigma = std::sqrt(sigma2_p);
    const double lo = -8.0 * sigma;
    const double hi = 8.0 * sigma;
    const double norm_const = -std::log(std::numbers::pi * n0) - 0.5 * std::log(2.0 * std::numbers::pi * sigma2_p);
    auto log_integrand = [&](double theta) {
        const cplx mean = s_tilde * cplx{std::cos(theta), std::sin(theta)};
        return -std::norm(r - mean) / n0 - theta * theta / (2.0 * sigma2_p);
    };

    constexpr int panels = 64;
    const double width = (hi - lo) / panels;
    double shift = -inf;
    std::vector<double> grid(2 * panels + 1);
    for (int k = 0; k <= 2 * panels; ++k) {
        grid[k] = log_integrand(lo + 0.5 * width * k);
        shift = std::max(shift, grid[k]);
    }
    // The stationary point of the phase term can fall between grid nodes.
    const double peak = std::clamp(std::arg(r * std::conj(s_tilde)), lo, hi);
    shift = std::max(shift, log_integrand(peak));

    auto g = [&](double theta) { return std::exp(log_integrand(theta) - shift); };
    double coarse = 0.0;
    for (int p = 0; p < panels; ++p) {
        coarse += width / 6.0
                  * (std::exp(grid[2 * p] - shift) + 4.0 * std::exp(grid[2 * p + 1] - shift)
                     + std::exp(grid[2 * p + 2] - shift));
    }
    SimpsonState st{rel_tol * std::max(coarse, DBL_MIN) / panels, 48};
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + width * p;
        const double b = a + width;
        const double fa = std::exp(grid[2 * p] - shift);
        const double fm = std::exp(grid[2 * p + 1] - shift);
        const double fb = std::exp(grid[2 * p + 2] - shift);
        const double whole = width / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(g, a, b, fa, fm, fb, whole, st.abs_tol, 0, st);
    }
    QuadratureResult res;
    res.log_value = std::log(total) + shift + norm_const;
    res.achieved_tolerance = total > 0.0 ? st.error_sum / total : inf;
    res.converged = st.converged && res.achieved_tolerance <= rel_tol;
    return res;
}

ExactPosterior::ExactPosterior(const Constellation& constellation, const Precoder& rotation,
                               double n0, double sigma2_p, double rel_tol)
    : constellation_(&constellation),
      channels_(rotation.channels()),
      candidates_(1),
      n0_(n0),
      sigma2_p_(sigma2_p),
      rel_tol_(rel_tol)
{
    if (!(sigma2_p > 0.0)) {
        throw std::invalid_argument("exact posterior: sigma2_p must be positive");
    }
    for (std::size_t i = 0; i < channels_; ++i) {
        candidates_ *= constellation.order();
        if (candidates_ > max_candidates) {
            throw EnumerationRefused("exact posterior is a test-scale oracle; |X|^N too large");
        }
    }
    tilde_.resize(candidates_ * channels_);
    std::vector<cplx> s(channels_);
    for (std::size_t c = 0; c < candidates_; ++c) {
        std::size_t rest = c;
        for (std::size_t i = channels_; i-- > 0;) {
            s[i] = constellation.point(static_cast<std::uint32_t>(rest % constellation.order()));
            rest /= constellation.order();
        }
        rotation.forward(s, std::span<cplx>(tilde_.data() + c * channels_, channels_));
    }
}

std::vector<double> ExactPosterior::log_posterior(std::span<const cplx> r) const
{
    if (r.size() != channels_) {
        throw std::invalid_argument("exact posterior: expected one sample per channel");
    }
    std::vector<double> out(candidates_, 0.0);
    for (std::size_t c = 0; c < candidates_; ++c) {
        for (std::size_t i = 0; i < channels_; ++i) {
            const auto q = log_phase_integral(r[i], tilde_[c * channels_ + i], n0_, sigma2_p_, rel_tol_);
            quadrature_quality.achieved_tolerance =
                std::max(quadrature_quality.achieved_tolerance, q.achieved_tolerance);
            quadrature_quality.converged = quadrature_quality.converged && q.converged;
            out[c] += q.log_value;
        }
    }
    return out;
}

std::vector<double> ExactPosterior::posterior(std::span<const cplx> r) const
{
    std::vector<double> lp = log_posterior(r);
    const double mx = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (auto& v : lp) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : lp) {
        v /= sum;
    }
    return lp;
}

std::vector<std::uint32_t> ExactPosterior::detect(std::span<const cplx> r) const
{
    const std::vector<double> lp = log_posterior(r);
    // max_element returns the first maximum: lowest index on ties.
    std::size_t best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    std::vector<std::uint32_t> s_hat(channels_);
    for (std::size_t i = channels_; i-- > 0;) {
        s_hat[i] = static_cast<std::uint32_t>(best % constellation_->order());
        best /= constellation_->order();
    }
    return s_hat;
}

QuadratureResult ExactPosterior::last_quality()
{
    return quadrature_quality;
}

// ---------------------------------------------------------------------------
// Per-channel receiver

std::vector<std::uint32_t> per_channel_detect(std::span<const cplx> r, const Precoder& rotation,
                                              const Constellation& constellation)
{
    std::vector<cplx> derotated(r.size());
    rotation.inverse(r, derotated);
    std::vector<std::uint32_t> s_hat(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        s_hat[i] = constellation.nearest(derotated[i]);
    }
    return s_hat;
}

void symbol_llrs(cplx r_tilde, const Constellation& constellation, double n0_eff, double alpha,
                 std::span<double> out)
{
    const unsigned m = constellation.bits_per_symbol();
    if (out.size() != m) {
        throw std::invalid_argument("symbol_llrs: output must hold one LLR per bit");
    }
    const auto points = constellation.points();
    thread_local std::vector<double> d;
    d.resize(points.size());
    for (std::size_t x = 0; x < points.size(); ++x) {
        d[x] = -std::norm(r_tilde - alpha * points[x]) / n0_eff;
    }
    for (unsigned k = 0; k < m; ++k) {
        double max1 = -inf;
        double max0 = -inf;
        for (std::uint32_t x = 0; x < points.size(); ++x) {
            double& target = constellation.bit(x, k) ? max1 : max0;
            target = std::max(target, d[x]);
        }
        double sum1 = 0.0;
        double sum0 = 0.0;
        for (std::uint32_t x = 0; x < points.size(); ++x) {
            if (constellation.bit(x, k)) {
                sum1 += std::exp(d[x] - max1);
            } else {
                sum0 += std::exp(d[x] - max0);
            }
        }
        out[k] = clamp_llr((max1 + std::log(sum1)) - (max0 + std::log(sum0)));
    }
}

SoftOutput per_channel_soft(std::span<const cplx> r, const Precoder& rotation,
                            const Constellation& constellation, double n0_eff, double alpha)
{
    if (!(n0_eff > 0.0)) {
        throw std::invalid_argument("per_channel_soft: N0_eff must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("per_channel_soft: alpha must lie in (0, 1]");
    }
    std::vector<cplx> derotated(r.size());
    rotation.inverse(r, derotated);
    const unsigned m = constellation.bits_per_symbol();
    SoftOutput out{r.size(), m, std::vector<double>(r.size() * m)};
    for (std::size_t i = 0; i < r.size(); ++i) {
        symbol_llrs(derotated[i], constellation, n0_eff, alpha,
                    std::span<double>(out.llrs.data() + i * m, m));
    }
    return out;
}

SquareQamDemapper::SquareQamDemapper(const Constellation& constellation, double n0_eff,
                                     double alpha)
    : constellation_(&constellation), inv_n0_(1.0 / n0_eff), alpha_(alpha)
{
    if (!(n0_eff > 0.0)) {
        throw std::invalid_argument("demapper: N0_eff must be positive");
    }
}

void SquareQamDemapper::axis_llrs(double y, std::span<double> out) const
{
    const auto levels = constellation_->axis_levels();
    const auto labels = constellation_->axis_labels();
    const auto half = static_cast<unsigned>(out.size());
    double d[32];
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const double e = y - alpha_ * levels[j];
        d[j] = -e * e * inv_n0_;
    }
    for (unsigned k = 0; k < half; ++k) {
        const unsigned shift = half - 1 - k;
        double max1 = -inf;
        double max0 = -inf;
        for (std::size_t j = 0; j < levels.size(); ++j) {
            double& target = ((labels[j] >> shift) & 1U) ? max1 : max0;
            target = std::max(target, d[j]);
        }
        double sum1 = 0.0;
        double sum0 = 0.0;
        for (std::size_t j = 0; j < levels.size(); ++j) {
            if ((labels[j] >> shift) & 1U) {
                sum1 += std::exp(d[j] - max1);
            } else {
                sum0 += std::exp(d[j] - max0);
            }
        }
        out[k] = clamp_llr((max1 + std::log(sum1)) - (max0 + std::log(sum0)));
    }
}

void SquareQamDemapper::llrs(cplx r_tilde, std::span<double> out) const
{
    const unsigned half = constellation_->bits_per_symbol() / 2;
    axis_llrs(r_tilde.real(), out.subspan(0, half));
    axis_llrs(r_tilde.imag(), out.subspan(half, half));
}

}  // namespace rotsim
