#include "rotsim/montecarlo.hpp"

#include "rotsim/channel.hpp"
#include "rotsim/constellation.hpp"
#include "rotsim/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rotsim {

std::string_view to_string(ReceiverKind k)
{
    return k == ReceiverKind::joint ? "joint" : "per-channel";
}

std::string_view to_string(ChannelMode m)
{
    return m == ChannelMode::model ? "model" : "asymptotic";
}

std::string_view to_string(Fidelity f)
{
    return f == Fidelity::paper ? "paper" : "quick";
}

ReceiverKind parse_receiver(std::string_view text)
{
    if (text == "joint") {
        return ReceiverKind::joint;
    }
    if (text == "per-channel" || text == "per_channel") {
        return ReceiverKind::per_channel;
    }
    throw std::invalid_argument("unknown receiver '" + std::string(text) + "' (joint | per-channel)");
}

ChannelMode parse_channel_mode(std::string_view text)
{
    if (text == "model") {
        return ChannelMode::model;
    }
    if (text == "asymptotic") {
        return ChannelMode::asymptotic;
    }
    throw std::invalid_argument("unknown channel '" + std::string(text) + "' (model | asymptotic)");
}

Fidelity parse_fidelity(std::string_view text)
{
    if (text == "paper") {
        return Fidelity::paper;
    }
    if (text == "quick") {
        return Fidelity::quick;
    }
    throw std::invalid_argument("unknown fidelity '" + std::string(text) + "' (paper | quick)");
}

std::string_view to_string(Metric m)
{
    switch (m) {
    case Metric::bler: return "bler";
    case Metric::ser: return "ser";
    case Metric::ber: return "ber";
    case Metric::air: return "air";
    }
    return "?";
}

double metric_value(const MetricsReport& r, Metric m)
{
    switch (m) {
    case Metric::bler: return r.bler();
    case Metric::ser: return r.ser();
    case Metric::ber: return r.ber();
    case Metric::air: return r.air();
    }
    return 0.0;
}

double metric_stderr(const MetricsReport& r, Metric m)
{
    switch (m) {
    case Metric::bler: return r.bler_stderr();
    case Metric::ser: return r.ser_stderr();
    case Metric::ber: return r.ber_stderr();
    case Metric::air: return r.air_stderr();
    }
    return 0.0;
}

namespace {

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_hadamard(const RotationRecipe& r)
{
    return r.kind == RecipeKind::hadamard;
}

}  // namespace

std::uint64_t PlanPoint::blocks() const
{
    return (min_symbols + channels - 1) / channels;
}

std::string PlanPoint::coordinates() const
{
    return "N=" + std::to_string(channels) + ";M=" + std::to_string(qam) + ";snr_db="
           + fmt_double(snr_db) + ";sigma2_p=" + fmt_double(sigma2_p)
           + ";receiver=" + std::string(to_string(receiver)) + ";channel="
           + std::string(to_string(channel));
}

std::uint64_t PlanPoint::stream_id(bool common_random_numbers) const
{
    std::string key = coordinates();
    if (!common_random_numbers) {
        key += ";rotation=" + rotation.to_text();
    }
    return mix64(fnv1a(key));
}

void validate_point(const PlanPoint& point)
{
    if (point.channels < 1) {
        throw std::invalid_argument("N must be >= 1");
    }
    if (point.min_symbols < 1) {
        throw std::invalid_argument("min_symbols must be >= 1");
    }
    if (!std::isfinite(point.snr_db)) {
        throw std::invalid_argument("snr_db must be finite");
    }
    if (!(point.sigma2_p >= 0.0) || !std::isfinite(point.sigma2_p)) {
        throw std::invalid_argument("sigma2_p must be finite and >= 0");
    }
    (void)Constellation::square_qam(point.qam);
    if (point.channel == ChannelMode::asymptotic) {
        if (point.receiver != ReceiverKind::per_channel) {
            throw std::invalid_argument("the asymptotic channel is defined for the per-channel receiver only");
        }
        if (point.rotation.kind != RecipeKind::identity && !is_hadamard(point.rotation)) {
            throw std::invalid_argument("the asymptotic channel applies to hadamard rotations (or identity as baseline)");
        }
        return;
    }
    if (point.receiver == ReceiverKind::joint && !(point.sigma2_p > 0.0)) {
        throw std::invalid_argument("joint receiver needs sigma2_p > 0; use receiver = per-channel");
    }
    (void)Precoder(point.rotation, point.channels);
}

namespace {

// Everything a chunk needs, built once per point and shared read-only.
struct PointContext {
    PlanPoint point;
    std::uint64_t master_seed;
    std::uint64_t stream_id;
    Constellation constellation;
    ChannelParams params;
    bool surrogate;
    std::optional<Precoder> precoder;
    std::optional<JointDetector> detector;
    std::optional<SquareQamDemapper> demapper;
    std::optional<PhaseNoiseChannel> channel;
    std::optional<AsymptoticChannel> asymptotic;

    PointContext(const PlanPoint& p, std::uint64_t seed, const EngineOptions& options)
        : point(p),
          master_seed(seed),
          stream_id(p.stream_id(options.common_random_numbers)),
          constellation(Constellation::square_qam(p.qam)),
          surrogate(p.channel == ChannelMode::asymptotic && is_hadamard(p.rotation))
    {
        params.channels = p.channels;
        params.es = constellation.es();
        params.n0 = snr_to_n0(p.snr_db, params.es);
        params.sigma2_p = p.sigma2_p;
        params.validate();
        if (surrogate) {
            asymptotic.emplace(params);
            demapper.emplace(constellation, asymptotic->noise_variance(), asymptotic->alpha());
            return;
        }
        precoder.emplace(p.rotation, p.channels);
        channel.emplace(params);
        demapper.emplace(constellation, derotated_error_variance(params), 1.0);
        if (p.receiver == ReceiverKind::joint) {
            JointDetectorConfig cfg;
            cfg.n0 = params.n0;
            cfg.sigma2_p = params.sigma2_p;
            cfg.enumeration_cap = options.enumeration_cap;
            detector.emplace(constellation, *precoder, cfg);
        }
    }

    [[nodiscard]] MetricsReport run_chunk(std::uint64_t chunk) const
    {
        const std::uint64_t total = point.blocks();
        const std::uint64_t first = chunk * chunk_blocks;
        const std::uint64_t count = std::min(chunk_blocks, total - first);
        const std::size_t n = point.channels;
        const unsigned m = constellation.bits_per_symbol();

        Stream data(StreamKey{master_seed, stream_id, chunk, SourceTag::data});
        Stream phase(StreamKey{master_seed, stream_id, chunk, SourceTag::phase});
        Stream noise(StreamKey{master_seed, stream_id, chunk, SourceTag::noise});

        MetricsReport report;
        report.bits_per_symbol = m;
        report.seed = master_seed;
        std::vector<std::uint32_t> sym(n);
        std::vector<std::uint32_t> hat(n);
        std::vector<cplx> s(n);
        std::vector<cplx> tx(n);
        std::vector<cplx> rx(n);
        std::vector<cplx> derotated(n);
        std::vector<double> llr(m);

        for (std::uint64_t b = 0; b < count; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                sym[i] = data.index(constellation.order());
                s[i] = constellation.point(sym[i]);
            }
            double scale = 1.0;
            if (surrogate) {
                asymptotic->apply(s, noise, derotated);
                scale = asymptotic->alpha();
            } else {
                precoder->forward(s, tx);
                channel->apply(tx, phase, noise, rx);
                precoder->inverse(rx, derotated);
            }
            if (detector) {
                detector->detect(rx, hat);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    hat[i] = constellation.slice(derotated[i], scale);
                }
            }
            accumulate_hard(sym, hat, constellation, report);
            for (std::size_t i = 0; i < n; ++i) {
                demapper->llrs(derotated[i], llr);
                double penalty = 0.0;
                for (unsigned k = 0; k < m; ++k) {
                    penalty += bit_penalty(llr[k], constellation.bit(sym[i], k));
                }
                report.add_penalty(penalty);
            }
        }
        return report;
    }
};

}  // namespace

PointRun run_point_detailed(const PlanPoint& point, std::uint64_t master_seed,
                            const EngineOptions& options)
{
    validate_point(point);
    const PointContext ctx(point, master_seed, options);
    const std::uint64_t chunks = (point.blocks() + chunk_blocks - 1) / chunk_blocks;

    std::vector<MetricsReport> per_chunk(chunks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= chunks) {
                return;
            }
            try {
                per_chunk[c] = ctx.run_chunk(c);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(chunks);
                return;
            }
        }
    };
    const auto threads = static_cast<unsigned>(
        std::min<std::uint64_t>(std::max(options.workers, 1U), chunks));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    // Contiguous shards of chunks, each merged on its own, then combined.
    const std::uint64_t shards = std::clamp<std::uint64_t>(options.shards, 1, std::max<std::uint64_t>(chunks, 1));
    PointRun run;
    run.report.bits_per_symbol = ctx.constellation.bits_per_symbol();
    run.report.seed = master_seed;
    for (std::uint64_t sh = 0; sh < shards; ++sh) {
        MetricsReport part;
        const std::uint64_t lo = sh * chunks / shards;
        const std::uint64_t hi = (sh + 1) * chunks / shards;
        for (std::uint64_t c = lo; c < hi; ++c) {
            part.merge(per_chunk[c]);
        }
        run.report.merge(part);
    }
    if (options.keep_chunks) {
        run.chunks = std::move(per_chunk);
    }
    return run;
}

MetricsReport run_point(const PlanPoint& point, std::uint64_t master_seed, const EngineOptions& options)
{
    EngineOptions o = options;
    o.keep_chunks = false;
    return run_point_detailed(point, master_seed, o).report;
}

DerotationStatistics measure_derotation(const PlanPoint& point, std::uint64_t master_seed,
                                        bool common_random_numbers)
{
    if (point.channel != ChannelMode::model) {
        throw std::invalid_argument("measure_derotation: model channel only");
    }
    validate_point(point);
    const Constellation constellation = Constellation::square_qam(point.qam);
    ChannelParams params;
    params.channels = point.channels;
    params.es = constellation.es();
    params.n0 = snr_to_n0(point.snr_db, params.es);
    params.sigma2_p = point.sigma2_p;
    const Precoder precoder(point.rotation, point.channels);
    const PhaseNoiseChannel channel(params);
    const std::uint64_t id = point.stream_id(common_random_numbers);
    const std::size_t n = point.channels;

    std::vector<cplx> s_all;
    std::vector<cplx> r_all;
    s_all.reserve(point.blocks() * n);
    r_all.reserve(point.blocks() * n);
    std::vector<cplx> s(n);
    std::vector<cplx> tx(n);
    std::vector<cplx> rx(n);
    const std::uint64_t chunks = (point.blocks() + chunk_blocks - 1) / chunk_blocks;
    for (std::uint64_t c = 0; c < chunks; ++c) {
        Stream data(StreamKey{master_seed, id, c, SourceTag::data});
        Stream phase(StreamKey{master_seed, id, c, SourceTag::phase});
        Stream noise(StreamKey{master_seed, id, c, SourceTag::noise});
        const std::uint64_t count = std::min(chunk_blocks, point.blocks() - c * chunk_blocks);
        for (std::uint64_t b = 0; b < count; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = constellation.point(data.index(constellation.order()));
            }
            precoder.forward(s, tx);
            channel.apply(tx, phase, noise, rx);
            precoder.inverse(rx, rx);
            s_all.insert(s_all.end(), s.begin(), s.end());
            r_all.insert(r_all.end(), rx.begin(), rx.end());
        }
    }
    DerotationStatistics st;
    st.samples = s_all.size();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < s_all.size(); ++k) {
        num += (r_all[k] * std::conj(s_all[k])).real();
        den += std::norm(s_all[k]);
    }
    st.alpha = num / den;
    cplx pv{};
    double var = 0.0;
    for (std::size_t k = 0; k < s_all.size(); ++k) {
        const cplx e = r_all[k] - st.alpha * s_all[k];
        var += std::norm(e);
        pv += e * e;
    }
    const auto count = static_cast<double>(st.samples);
    st.noise_variance = var / count;
    st.pseudo_variance = pv / count;
    double spread = 0.0;
    for (std::size_t k = 0; k < s_all.size(); ++k) {
        const cplx e = r_all[k] - st.alpha * s_all[k];
        spread += std::norm(e * e - st.pseudo_variance);
    }
    st.pseudo_variance_stderr = std::sqrt(spread / (count - 1.0) / count);
    return st;
}

double paired_difference_stderr(const std::vector<MetricsReport>& a,
                                const std::vector<MetricsReport>& b, Metric m)
{
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("paired_difference_stderr: need matching chunk lists (>= 2)");
    }
    // Ratio estimator over chunks of (nearly) equal size.
    const auto k = static_cast<double>(a.size());
    double mean = 0.0;
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = metric_value(a[i], m) - metric_value(b[i], m);
        mean += d[i];
    }
    mean /= k;
    double ss = 0.0;
    for (double v : d) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / (k - 1.0) / k);
}

std::uint64_t ExperimentPlan::symbols_per_point() const
{
    if (min_symbols) {
        return *min_symbols;
    }
    return fidelity == Fidelity::paper ? paper_min_symbols : quick_default_symbols;
}

void ExperimentPlan::validate() const
{
    if (channels.empty() || qam.empty() || snr_db.empty() || sigma2_p.empty() || rotations.empty()
        || receivers.empty() || channel_modes.empty()) {
        throw std::invalid_argument("every sweep axis needs at least one value");
    }
    if (symbols_per_point() < 1) {
        throw std::invalid_argument("min_symbols must be >= 1");
    }
    if (fidelity == Fidelity::paper && symbols_per_point() < paper_min_symbols) {
        throw std::invalid_argument("paper fidelity needs min_symbols >= 1000000 (got "
                                    + std::to_string(symbols_per_point()) + "); use fidelity = quick");
    }
}

std::vector<PlanPoint> ExperimentPlan::points() const
{
    std::vector<PlanPoint> out;
    for (auto n : channels) {
        for (auto m : qam) {
            for (auto snr : snr_db) {
                for (auto s2 : sigma2_p) {
                    for (auto ch : channel_modes) {
                        for (auto rx : receivers) {
                            for (const auto& rot : rotations) {
                                PlanPoint p;
                                p.channels = n;
                                p.qam = m;
                                p.snr_db = snr;
                                p.sigma2_p = s2;
                                p.rotation = rot;
                                p.receiver = rx;
                                p.channel = ch;
                                p.min_symbols = symbols_per_point();
                                out.push_back(std::move(p));
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::vector<PointOutcome> run_sweep(
    const ExperimentPlan& plan, const EngineOptions& options,
    const std::function<void(std::size_t, std::size_t, const PointOutcome&)>& progress)
{
    plan.validate();
    EngineOptions o = options;
    o.common_random_numbers = plan.common_random_numbers;
    o.keep_chunks = false;
    const auto points = plan.points();
    std::vector<PointOutcome> outcomes;
    outcomes.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        PointOutcome out{points[i], std::nullopt, {}};
        try {
            out.report = run_point(points[i], plan.seed, o);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        outcomes.push_back(std::move(out));
        if (progress) {
            progress(i + 1, points.size(), outcomes.back());
        }
    }
    return outcomes;
}

std::optional<std::size_t> find_baseline(const std::vector<PointOutcome>& outcomes, std::size_t i)
{
    const auto key = outcomes[i].point.coordinates();
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
        if (outcomes[j].point.rotation.kind == RecipeKind::identity
            && outcomes[j].point.coordinates() == key) {
            return j;
        }
    }
    return std::nullopt;
}

}  // namespace rotsim
