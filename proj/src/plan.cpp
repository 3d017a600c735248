#include "rotsim/plan.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace rotsim {

namespace {

struct Entry {
    int line = 0;
    std::vector<std::string> values;
    bool is_list = false;
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Splits on commas outside parentheses.
std::vector<std::string> split_items(std::string_view s, int line)
{
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (--depth < 0) {
                throw PlanError(line, "unbalanced ')'");
            }
        }
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) {
        throw PlanError(line, "unbalanced '('");
    }
    out.push_back(trim(cur));
    for (const auto& item : out) {
        if (item.empty()) {
            throw PlanError(line, "empty list item");
        }
    }
    return out;
}

std::map<std::string, Entry> parse_entries(std::string_view text)
{
    std::map<std::string, Entry> entries;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    std::string pending_key;
    std::string pending_value;
    int pending_line = 0;

    auto finish = [&](const std::string& key, const std::string& value, int line) {
        Entry e;
        e.line = line;
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw PlanError(line, "list for '" + key + "' must end with ']'");
            }
            e.is_list = true;
            const std::string inner = trim(std::string_view(value).substr(1, value.size() - 2));
            if (inner.empty()) {
                throw PlanError(line, "empty list for '" + key + "'");
            }
            e.values = split_items(inner, line);
        } else {
            if (value.empty()) {
                throw PlanError(line, "missing value for '" + key + "'");
            }
            e.values = {value};
            (void)split_items(value, line);
        }
        if (!entries.emplace(key, std::move(e)).second) {
            throw PlanError(line, "duplicate key '" + key + "'");
        }
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (!pending_key.empty()) {
            if (!line.empty()) {
                pending_value += (pending_value.back() == '[' ? "" : " ") + line;
            }
            if (!line.empty() && line.back() == ']') {
                finish(pending_key, pending_value, pending_line);
                pending_key.clear();
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw PlanError(line_no, "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
            throw PlanError(line_no, "missing key before '='");
        }
        if (!value.empty() && value.front() == '[' && value.back() != ']') {
            pending_key = key;
            pending_value = value;
            pending_line = line_no;
            continue;
        }
        finish(key, value, line_no);
    }
    if (!pending_key.empty()) {
        throw PlanError(pending_line, "unterminated list for '" + pending_key + "'");
    }
    return entries;
}

double to_double(const std::string& s, int line, const std::string& key)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
        throw PlanError(line, "'" + key + "': expected a number, got '" + s + "'");
    }
    return v;
}

std::uint64_t to_count(const std::string& s, int line, const std::string& key)
{
    const double v = to_double(s, line, key);
    if (v < 0.0 || v != std::floor(v) || v > 1.8e19) {
        throw PlanError(line, "'" + key + "': expected a non-negative integer, got '" + s + "'");
    }
    // Accepts 1e6 style as well as 1000000.
    std::uint64_t u = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, u);
    if (res.ec == std::errc{} && res.ptr == end) {
        return u;
    }
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s, int line, const std::string& key)
{
    if (s == "true" || s == "on" || s == "yes" || s == "1") {
        return true;
    }
    if (s == "false" || s == "off" || s == "no" || s == "0") {
        return false;
    }
    throw PlanError(line, "'" + key + "': expected true or false, got '" + s + "'");
}

// Runs `f`, rethrowing std::invalid_argument as a PlanError on `line`.
template <class F>
auto at_line(int line, F&& f)
{
    try {
        return f();
    } catch (const PlanError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw PlanError(line, e.what());
    }
}

class Reader {
public:
    explicit Reader(std::string_view text) : entries_(parse_entries(text)) {}

    template <class T, class F>
    std::vector<T> list(const std::string& key, F convert)
    {
        std::vector<T> out;
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return out;
        }
        used_.push_back(key);
        for (const auto& v : it->second.values) {
            out.push_back(convert(v, it->second.line, key));
        }
        return out;
    }

    template <class T, class F>
    std::optional<T> scalar(const std::string& key, F convert)
    {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return std::nullopt;
        }
        if (it->second.is_list) {
            throw PlanError(it->second.line, "'" + key + "' takes a single value");
        }
        used_.push_back(key);
        return convert(it->second.values.front(), it->second.line, key);
    }

    [[nodiscard]] int line_of(const std::string& key) const
    {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    void reject_unknown() const
    {
        for (const auto& [key, e] : entries_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw PlanError(e.line, "unknown key '" + key + "'");
            }
        }
    }

private:
    std::map<std::string, Entry> entries_;
    std::vector<std::string> used_;
};

auto as_double = [](const std::string& s, int line, const std::string& key) { return to_double(s, line, key); };
auto as_count = [](const std::string& s, int line, const std::string& key) { return to_count(s, line, key); };
auto as_bool = [](const std::string& s, int line, const std::string& key) { return to_bool(s, line, key); };
auto as_text = [](const std::string& s, int, const std::string&) { return s; };

}  // namespace

ExperimentPlan parse_plan(std::string_view text)
{
    Reader r(text);
    ExperimentPlan plan;

    if (auto v = r.list<std::uint64_t>("channels", as_count); !v.empty()) {
        plan.channels.assign(v.begin(), v.end());
    }
    if (auto v = r.list<std::uint64_t>("qam", as_count); !v.empty()) {
        plan.qam.clear();
        for (auto m : v) {
            plan.qam.push_back(static_cast<unsigned>(m));
            at_line(r.line_of("qam"), [&] { return Constellation::square_qam(static_cast<unsigned>(m)); });
        }
    }
    if (auto v = r.list<double>("snr_db", as_double); !v.empty()) {
        plan.snr_db = v;
    }
    if (auto v = r.list<double>("sigma2_p", as_double); !v.empty()) {
        for (double s : v) {
            if (s < 0.0) {
                throw PlanError(r.line_of("sigma2_p"), "sigma2_p must be >= 0");
            }
        }
        plan.sigma2_p = v;
    }
    auto parse_rotation = [](const std::string& s, int line, const std::string&) {
        return at_line(line, [&] { return RotationRecipe::parse_text(s); });
    };
    for (const char* key : {"rotations", "rotation"}) {
        if (auto v = r.list<RotationRecipe>(key, parse_rotation); !v.empty()) {
            plan.rotations = v;
        }
    }
    auto parse_rx = [](const std::string& s, int line, const std::string&) {
        return at_line(line, [&] { return parse_receiver(s); });
    };
    for (const char* key : {"receiver", "receivers"}) {
        if (auto v = r.list<ReceiverKind>(key, parse_rx); !v.empty()) {
            plan.receivers = v;
        }
    }
    auto parse_ch = [](const std::string& s, int line, const std::string&) {
        return at_line(line, [&] { return parse_channel_mode(s); });
    };
    for (const char* key : {"channel"}) {
        if (auto v = r.list<ChannelMode>(key, parse_ch); !v.empty()) {
            plan.channel_modes = v;
        }
    }
    plan.min_symbols = r.scalar<std::uint64_t>("min_symbols", as_count);
    if (auto v = r.scalar<std::uint64_t>("seed", as_count)) {
        plan.seed = *v;
    }
    if (auto v = r.scalar<std::string>("fidelity", as_text)) {
        plan.fidelity = at_line(r.line_of("fidelity"), [&] { return parse_fidelity(*v); });
    }
    if (auto v = r.scalar<bool>("common_random_numbers", as_bool)) {
        plan.common_random_numbers = *v;
    }
    r.reject_unknown();
    for (auto n : plan.channels) {
        if (n < 1) {
            throw PlanError(r.line_of("channels"), "channels must be >= 1");
        }
    }
    at_line(r.line_of("min_symbols"), [&] {
        plan.validate();
        return 0;
    });
    return plan;
}

OptimizerConfig parse_optimizer_config(std::string_view text)
{
    Reader r(text);
    OptimizerConfig cfg;
    cfg.point.rotation = RotationRecipe::identity();
    if (auto v = r.scalar<std::uint64_t>("channels", as_count)) {
        cfg.point.channels = *v;
    }
    if (auto v = r.scalar<std::uint64_t>("qam", as_count)) {
        cfg.point.qam = static_cast<unsigned>(*v);
    }
    if (auto v = r.scalar<double>("snr_db", as_double)) {
        cfg.point.snr_db = *v;
    }
    if (auto v = r.scalar<double>("sigma2_p", as_double)) {
        cfg.point.sigma2_p = *v;
    }
    if (auto v = r.scalar<std::string>("receiver", as_text)) {
        cfg.point.receiver = at_line(r.line_of("receiver"), [&] { return parse_receiver(*v); });
    }
    if (auto v = r.scalar<std::string>("objective", as_text)) {
        cfg.objective = at_line(r.line_of("objective"), [&] { return parse_objective(*v); });
    }
    if (auto v = r.scalar<std::uint64_t>("budget", as_count)) {
        cfg.budget = *v;
    }
    if (auto v = r.scalar<std::uint64_t>("initial_design", as_count)) {
        cfg.initial_design = *v;
    }
    if (auto v = r.scalar<std::uint64_t>("candidates", as_count)) {
        cfg.candidates = *v;
    }
    if (auto v = r.scalar<std::uint64_t>("seed", as_count)) {
        cfg.seed = *v;
    }
    if (auto v = r.scalar<std::string>("fidelity", as_text)) {
        cfg.fidelity = at_line(r.line_of("fidelity"), [&] { return parse_fidelity(*v); });
    }
    if (auto v = r.scalar<std::string>("method", as_text)) {
        cfg.method = at_line(r.line_of("method"), [&] { return parse_search_method(*v); });
    }
    if (auto v = r.scalar<bool>("common_random_numbers", as_bool)) {
        cfg.common_random_numbers = *v;
    }
    const auto symbols = r.scalar<std::uint64_t>("symbols_per_eval", as_count);
    cfg.point.min_symbols = symbols.value_or(
        cfg.fidelity == Fidelity::paper ? paper_min_symbols : ExperimentPlan::quick_default_symbols);
    r.reject_unknown();
    at_line(r.line_of("symbols_per_eval"), [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string cell(double v)
{
    if (!std::isfinite(v)) {
        return "NA";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string cell(const std::optional<double>& v)
{
    return v ? cell(*v) : "NA";
}

std::string quoted(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

}  // namespace

const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols = {
        "N",           "M",          "snr_db",     "sigma2_p",   "rotation",   "receiver",
        "channel",     "bler",       "ser",        "ber",        "air",        "bler_stderr",
        "ser_stderr",  "ber_stderr", "air_stderr", "n_symbols",  "seed",       "rel_bler",
        "rel_ser",     "rel_ber",    "rel_air",    "status"};
    return cols;
}

void write_csv(std::ostream& out, const std::vector<PointOutcome>& outcomes)
{
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const auto& p = o.point;
        out << p.channels << ',' << p.qam << ',' << cell(p.snr_db) << ',' << cell(p.sigma2_p) << ','
            << quoted(p.rotation.to_text()) << ',' << to_string(p.receiver) << ','
            << to_string(p.channel) << ',';
        if (o.report) {
            const auto& r = *o.report;
            out << cell(r.bler()) << ',' << cell(r.ser()) << ',' << cell(r.ber()) << ',' << cell(r.air())
                << ',' << cell(r.bler_stderr()) << ',' << cell(r.ser_stderr()) << ','
                << cell(r.ber_stderr()) << ',' << cell(r.air_stderr()) << ',' << r.n_symbols << ','
                << r.seed << ',';
            RelativeMetrics rel;
            if (const auto b = find_baseline(outcomes, i); b && outcomes[*b].report) {
                rel = relative_report(r, *outcomes[*b].report);
            }
            out << cell(rel.bler) << ',' << cell(rel.ser) << ',' << cell(rel.ber) << ','
                << cell(rel.air) << ",ok\n";
        } else {
            for (int k = 0; k < 8; ++k) {
                out << "NA,";
            }
            out << "NA,NA,NA,NA,NA,NA,error\n";
        }
    }
}

void write_trace_csv(std::ostream& out, const OptimizationResult& result)
{
    out << "index,phase,phi3,phi4,phi5,phi6,objective,stderr,incumbent\n";
    for (const auto& row : result.trace) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g,%s,%s,%d\n", row.index,
                      row.phase.c_str(), row.angles[0], row.angles[1], row.angles[2], row.angles[3],
                      cell(row.objective).c_str(), cell(row.stderr_).c_str(), row.incumbent ? 1 : 0);
        out << buf;
    }
}

std::string content_hash(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const
{
    nlohmann::ordered_json j;
    j["command"] = command;
    j["input"] = {{"path", input_path}, {"fnv1a64", input_hash}};
    j["tool_version"] = std::string(tool_version);
    j["seed"] = seed;
    j["workers"] = workers;
    j["fidelity"] = fidelity;
    j["started"] = started;
    j["finished"] = finished;
    j["outputs"] = outputs;
    j["errors"] = errors;
    return j.dump(2) + "\n";
}

}  // namespace rotsim
