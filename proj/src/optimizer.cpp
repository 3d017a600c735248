#include "rotsim/optimizer.hpp"

#include "rotsim/rng.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace rotsim {

std::string_view to_string(Objective o)
{
    switch (o) {
    case Objective::bler: return "bler";
    case Objective::ber: return "ber";
    case Objective::ser: return "ser";
    case Objective::neg_air: return "neg-air";
    }
    return "?";
}

std::string_view to_string(SearchMethod m)
{
    return m == SearchMethod::rbf ? "rbf" : "nelder-mead";
}

Objective parse_objective(std::string_view text)
{
    if (text == "bler") return Objective::bler;
    if (text == "ber") return Objective::ber;
    if (text == "ser") return Objective::ser;
    if (text == "neg-air" || text == "air") return Objective::neg_air;
    throw std::invalid_argument("unknown objective '" + std::string(text) + "' (bler | ber | ser | neg-air)");
}

SearchMethod parse_search_method(std::string_view text)
{
    if (text == "rbf") return SearchMethod::rbf;
    if (text == "nelder-mead") return SearchMethod::nelder_mead;
    throw std::invalid_argument("unknown method '" + std::string(text) + "' (rbf | nelder-mead)");
}

double objective_value(const MetricsReport& r, Objective o)
{
    switch (o) {
    case Objective::bler: return r.bler();
    case Objective::ber: return r.ber();
    case Objective::ser: return r.ser();
    case Objective::neg_air: return -r.air();
    }
    return 0.0;
}

double objective_stderr(const MetricsReport& r, Objective o)
{
    switch (o) {
    case Objective::bler: return r.bler_stderr();
    case Objective::ber: return r.ber_stderr();
    case Objective::ser: return r.ser_stderr();
    case Objective::neg_air: return r.air_stderr();
    }
    return 0.0;
}

void OptimizerConfig::validate() const
{
    if (point.channels != 2) {
        throw std::invalid_argument("optimizer: the Givens parameterization is 4D, so N must be 2");
    }
    if (initial_design < 6) {
        throw std::invalid_argument("optimizer: initial design needs at least 6 points");
    }
    if (budget < initial_design) {
        throw std::invalid_argument("optimizer: budget must be >= initial design size");
    }
    if (candidates < 1) {
        throw std::invalid_argument("optimizer: candidates must be >= 1");
    }
    if (fidelity == Fidelity::paper && point.min_symbols < paper_min_symbols) {
        throw std::invalid_argument("optimizer: paper fidelity needs symbols_per_eval >= 1000000");
    }
    if (point.channel != ChannelMode::model) {
        throw std::invalid_argument("optimizer: angles are evaluated on the model channel");
    }
    validate_point(point);
}

namespace {

using Point4 = std::array<double, 4>;

constexpr double pi = std::numbers::pi;
// Largest double below pi: the box is half-open.
const double box_hi = std::nextafter(pi, 0.0);

Point4 project(Point4 x)
{
    for (auto& v : x) {
        v = std::clamp(v, -pi, box_hi);
    }
    return x;
}

double distance(const Point4& a, const Point4& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

// Cubic radial basis interpolant with a linear polynomial tail.
class CubicRbf {
public:
    bool fit(const std::vector<Point4>& x, const std::vector<double>& f)
    {
        x_ = x;
        const auto n = static_cast<Eigen::Index>(x.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 5, n + 5);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double r = distance(x[i], x[j]);
                a(i, j) = r * r * r;
            }
            for (Eigen::Index k = 0; k < 4; ++k) {
                a(i, n + k) = x[i][k];
                a(n + k, i) = x[i][k];
            }
            a(i, n + 4) = 1.0;
            a(n + 4, i) = 1.0;
        }
        lu_.compute(a);
        if (!lu_.isInvertible()) {
            return false;
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 5);
        for (Eigen::Index i = 0; i < n; ++i) {
            rhs(i) = f[i];
        }
        coef_ = lu_.solve(rhs);
        return coef_.allFinite();
    }

    [[nodiscard]] Eigen::VectorXd basis(const Point4& y) const
    {
        const auto n = static_cast<Eigen::Index>(x_.size());
        Eigen::VectorXd u(n + 5);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = distance(y, x_[i]);
            u(i) = r * r * r;
        }
        for (Eigen::Index k = 0; k < 4; ++k) {
            u(n + k) = y[k];
        }
        u(n + 4) = 1.0;
        return u;
    }

    [[nodiscard]] double value(const Eigen::VectorXd& u) const { return u.dot(coef_); }

    // u^T A^-1 u; its reciprocal is the coefficient the new point would get
    // in the interpolant (phi(0) = 0 for the cubic kernel).
    [[nodiscard]] double quadratic_form(const Eigen::VectorXd& u) const
    {
        return u.dot(lu_.solve(u));
    }

private:
    std::vector<Point4> x_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd coef_;
};

struct BudgetExhausted {};

class Search {
public:
    Search(const OptimizerConfig& cfg, const Evaluator& evaluate) : cfg_(cfg), evaluate_(evaluate) {}

    double eval(const Point4& x, const std::string& phase)
    {
        if (trace_.size() >= cfg_.budget) {
            throw BudgetExhausted{};
        }
        const GivensAngles4D angles(x);
        MetricsReport r = evaluate_(angles);
        TraceRow row;
        row.index = trace_.size();
        row.phase = phase;
        row.angles = angles;
        row.objective = objective_value(r, cfg_.objective);
        row.stderr_ = objective_stderr(r, cfg_.objective);
        if (!std::isfinite(row.objective)) {
            throw std::runtime_error("optimizer: objective is not finite at " + RotationRecipe::givens4(angles).to_text());
        }
        points_.push_back(angles.values());
        values_.push_back(row.objective);
        reports_.push_back(std::move(r));
        trace_.push_back(std::move(row));
        return values_.back();
    }

    [[nodiscard]] std::size_t best() const
    {
        // First minimum: ties go to the earlier evaluation.
        return static_cast<std::size_t>(std::min_element(values_.begin(), values_.end()) - values_.begin());
    }

    [[nodiscard]] bool done() const { return trace_.size() >= cfg_.budget; }

    void run_design()
    {
        for (const auto& x : latin_hypercube(cfg_.initial_design, cfg_.seed)) {
            eval(x, "design");
        }
    }

    void run_rbf()
    {
        static constexpr double cycle[] = {1.0, 0.5, 0.25, 0.1, 0.01, 0.0};
        CubicRbf rbf;
        for (std::uint64_t iter = 0; !done(); ++iter) {
            const double w = cycle[iter % std::size(cycle)];
            Stream rng(StreamKey{cfg_.seed, 0, iter, SourceTag::candidates});
            const Point4 incumbent = points_[best()];
            const double sd = w >= 0.25 ? 0.5 : (w >= 0.1 ? 0.2 : 0.05);
            std::vector<Point4> cand;
            cand.reserve(2 * cfg_.candidates);
            for (std::size_t i = 0; i < cfg_.candidates; ++i) {
                Point4 x;
                for (auto& v : x) {
                    v = -pi + 2.0 * pi * rng.uniform();
                }
                cand.push_back(project(x));
            }
            for (std::size_t i = 0; i < cfg_.candidates; ++i) {
                Point4 x = incumbent;
                for (auto& v : x) {
                    v += sd * rng.normal();
                }
                cand.push_back(project(x));
            }

            std::optional<Point4> next;
            if (rbf.fit(points_, values_)) {
                next = select(rbf, cand, w);
            }
            if (!next) {
                // Degenerate surrogate: fall back to the first admissible
                // uniform candidate.
                for (const auto& x : cand) {
                    if (admissible(x)) {
                        next = x;
                        break;
                    }
                }
            }
            if (!next) {
                next = cand.front();
            }
            eval(*next, "rbf");
        }
    }

    void run_nelder_mead()
    {
        Point4 start = points_[best()];
        double step = 0.5;
        for (std::uint64_t restart = 0; !done(); ++restart) {
            nelder_mead(start, step);
            Stream rng(StreamKey{cfg_.seed, 1, restart, SourceTag::candidates});
            for (auto& v : start) {
                v = -pi + 2.0 * pi * rng.uniform();
            }
            step = 1.0;
        }
    }

    OptimizationResult finish(bool exhausted)
    {
        OptimizationResult res;
        const std::size_t b = best();
        res.incumbent_index = b;
        res.angles = GivensAngles4D(points_[b]);
        res.report = reports_[b];
        res.objective = values_[b];
        res.objective_stderr = trace_[b].stderr_;
        res.budget_exhausted = exhausted;
        const std::size_t design = std::min(cfg_.initial_design, values_.size());
        const double design_mean =
            std::accumulate(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(design), 0.0)
            / static_cast<double>(design);
        if (design_mean - res.objective <= 2.0 * res.objective_stderr) {
            res.noisy_objective = true;
            res.warnings.push_back(
                "noisy objective: incumbent improves on the initial-design mean by less than two standard errors");
        }
        trace_[b].incumbent = true;
        res.trace = std::move(trace_);
        return res;
    }

private:
    [[nodiscard]] bool admissible(const Point4& x) const
    {
        for (const auto& p : points_) {
            if (distance(x, p) < 1e-3) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] std::optional<Point4> select(const CubicRbf& rbf, const std::vector<Point4>& cand, double w) const
    {
        std::vector<double> s(cand.size());
        std::vector<double> q(cand.size());
        std::vector<char> ok(cand.size());
        double s_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cand.size(); ++i) {
            ok[i] = admissible(cand[i]);
            if (!ok[i]) {
                continue;
            }
            const Eigen::VectorXd u = rbf.basis(cand[i]);
            s[i] = rbf.value(u);
            q[i] = w > 0.0 ? std::abs(rbf.quadratic_form(u)) : 1.0;
            if (!std::isfinite(s[i]) || !std::isfinite(q[i]) || q[i] <= 0.0) {
                ok[i] = 0;
                continue;
            }
            s_min = std::min(s_min, s[i]);
        }
        if (!std::isfinite(s_min)) {
            return std::nullopt;
        }
        const double f_max = *std::max_element(values_.begin(), values_.end());
        const double target = s_min - w * std::max(f_max - s_min, 0.0);
        std::optional<std::size_t> pick;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (!ok[i]) {
                continue;
            }
            const double score = w > 0.0 ? (s[i] - target) * (s[i] - target) / q[i] : s[i];
            if (score < best_score) {
                best_score = score;
                pick = i;
            }
        }
        if (!pick) {
            return std::nullopt;
        }
        return cand[*pick];
    }

    void nelder_mead(const Point4& start, double step)
    {
        std::array<Point4, 5> simplex;
        std::array<double, 5> f{};
        simplex[0] = project(start);
        for (std::size_t i = 0; i < 4; ++i) {
            simplex[i + 1] = simplex[0];
            simplex[i + 1][i] += simplex[0][i] + step < box_hi ? step : -step;
        }
        for (std::size_t i = 0; i < 5; ++i) {
            f[i] = eval(simplex[i], "nelder-mead");
        }
        for (int iter = 0; iter < 1000 && !done(); ++iter) {
            std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
            std::array<Point4, 5> s2;
            std::array<double, 5> f2{};
            for (std::size_t i = 0; i < 5; ++i) {
                s2[i] = simplex[order[i]];
                f2[i] = f[order[i]];
            }
            simplex = s2;
            f = f2;
            double size = 0.0;
            for (std::size_t i = 1; i < 5; ++i) {
                size = std::max(size, distance(simplex[i], simplex[0]));
            }
            if (size < 1e-3) {
                return;
            }
            Point4 centroid{};
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t k = 0; k < 4; ++k) {
                    centroid[k] += simplex[i][k] / 4.0;
                }
            }
            auto along = [&](double t) {
                Point4 x;
                for (std::size_t k = 0; k < 4; ++k) {
                    x[k] = centroid[k] + t * (simplex[4][k] - centroid[k]);
                }
                return project(x);
            };
            const Point4 xr = along(-1.0);
            const double fr = eval(xr, "nelder-mead");
            if (fr < f[0]) {
                const Point4 xe = along(-2.0);
                const double fe = eval(xe, "nelder-mead");
                if (fe < fr) {
                    simplex[4] = xe;
                    f[4] = fe;
                } else {
                    simplex[4] = xr;
                    f[4] = fr;
                }
            } else if (fr < f[3]) {
                simplex[4] = xr;
                f[4] = fr;
            } else {
                const bool outside = fr < f[4];
                const Point4 xc = along(outside ? -0.5 : 0.5);
                const double fc = eval(xc, "nelder-mead");
                if (fc < std::min(fr, f[4])) {
                    simplex[4] = xc;
                    f[4] = fc;
                } else {
                    for (std::size_t i = 1; i < 5; ++i) {
                        for (std::size_t k = 0; k < 4; ++k) {
                            simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                        }
                        f[i] = eval(simplex[i], "nelder-mead");
                    }
                }
            }
        }
    }

    const OptimizerConfig& cfg_;
    const Evaluator& evaluate_;
    std::vector<Point4> points_;
    std::vector<double> values_;
    std::vector<MetricsReport> reports_;
    std::vector<TraceRow> trace_;
};

}  // namespace

std::vector<std::array<double, 4>> latin_hypercube(std::size_t n, std::uint64_t seed)
{
    Stream rng(StreamKey{seed, 0, 0, SourceTag::design});
    std::vector<std::array<double, 4>> out(n);
    for (std::size_t d = 0; d < 4; ++d) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.index(static_cast<std::uint32_t>(i))]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
            out[i][d] = std::min(-pi + 2.0 * pi * u, box_hi);
        }
    }
    return out;
}

OptimizationResult optimize_rotation(const OptimizerConfig& config, const Evaluator& evaluate)
{
    config.validate();
    Search search(config, evaluate);
    bool exhausted = false;
    try {
        search.run_design();
        if (config.method == SearchMethod::rbf) {
            search.run_rbf();
        } else {
            search.run_nelder_mead();
        }
        exhausted = search.done();
    } catch (const BudgetExhausted&) {
        exhausted = true;
    }
    return search.finish(exhausted);
}

OptimizationResult optimize_rotation(const OptimizerConfig& config)
{
    EngineOptions engine = config.engine;
    engine.common_random_numbers = config.common_random_numbers;
    const Evaluator evaluate = [&](const GivensAngles4D& angles) {
        PlanPoint p = config.point;
        p.rotation = RotationRecipe::givens4(angles);
        return run_point(p, config.seed, engine);
    };
    return optimize_rotation(config, evaluate);
}

MetricsReport evaluate_fixed(const RotationRecipe& rotation, PlanPoint point, ReceiverKind receiver,
                             std::uint64_t seed, const EngineOptions& options)
{
    point.rotation = rotation;
    point.receiver = receiver;
    return run_point(point, seed, options);
}

// ---------------------------------------------------------------------------
// Angle fitting

RotationMatrix AngleFit::matrix() const
{
    return givens(4, 3, 4, gauge34) * givens(4, 1, 2, gauge12) * compose_4d(angles);
}

namespace {

struct FitFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const RotationMatrix* target;
    bool gauge;

    [[nodiscard]] int inputs() const { return gauge ? 6 : 4; }
    [[nodiscard]] int values() const { return 16; }

    [[nodiscard]] AngleFit unpack(const Eigen::VectorXd& p) const
    {
        AngleFit fit;
        const Eigen::Index o = gauge ? 2 : 0;
        fit.gauge34 = gauge ? p(0) : 0.0;
        fit.gauge12 = gauge ? p(1) : 0.0;
        fit.angles = GivensAngles4D(p(o), p(o + 1), p(o + 2), p(o + 3));
        return fit;
    }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& fvec) const
    {
        const RotationMatrix m = unpack(p).matrix();
        for (int i = 0; i < 16; ++i) {
            fvec(i) = m.entries()[i] - target->entries()[i];
        }
        return 0;
    }
};

}  // namespace

AngleFit fit_givens_angles(const RotationMatrix& target, bool phase_gauge, std::uint64_t seed, int starts)
{
    if (target.dim() != 4) {
        throw std::invalid_argument("fit_givens_angles: target must be 4x4");
    }
    FitFunctor f{&target, phase_gauge};
    Stream rng(StreamKey{seed, 0, 0, SourceTag::design});
    AngleFit best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(starts, 1); ++s) {
        Eigen::VectorXd p(f.inputs());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            p(i) = s == 0 ? 0.0 : -pi + 2.0 * pi * rng.uniform();
        }
        Eigen::NumericalDiff<FitFunctor> nd(f);
        Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FitFunctor>> lm(nd);
        lm.parameters.xtol = 1e-15;
        lm.parameters.ftol = 1e-15;
        lm.parameters.maxfev = 4000;
        lm.minimize(p);
        AngleFit fit = f.unpack(p);
        fit.gauge34 = wrap_angle(fit.gauge34);
        fit.gauge12 = wrap_angle(fit.gauge12);
        fit.residual = max_abs_difference(fit.matrix(), target);
        if (fit.residual < best.residual) {
            best = fit;
        }
        if (best.residual < 1e-13) {
            break;
        }
    }
    return best;
}

}  // namespace rotsim
