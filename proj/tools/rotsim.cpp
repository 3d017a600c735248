// Command-line front end: simulate, optimize, selftest.

#include "rotsim/montecarlo.hpp"
#include "rotsim/optimizer.hpp"
#include "rotsim/plan.hpp"
#include "rotsim/selftest.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace rotsim;

namespace {

// Exit codes.
constexpr int exit_ok = 0;
constexpr int exit_input = 1;       // unreadable or malformed input
constexpr int exit_failed = 2;      // selftest failure or run error
constexpr int exit_partial = 3;     // sweep finished with failed points

std::optional<std::uint64_t> env_number(const char* name)
{
    const char* v = std::getenv(name);
    if (!v || !*v) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const auto n = std::stoull(v, &used);
        if (used == std::string(v).size()) {
            return n;
        }
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring " << name << "='" << v << "' (not a number)\n";
    return std::nullopt;
}

unsigned default_workers()
{
    if (auto w = env_number("ROTSIM_WORKERS"); w && *w > 0) {
        return static_cast<unsigned>(*w);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << content;
}

struct CommonFlags {
    unsigned workers = 0;
    std::optional<std::uint64_t> seed;
    std::string fidelity;
    unsigned shards = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--workers", f.workers, "Worker threads (default: $ROTSIM_WORKERS or all cores)");
    cmd->add_option("--seed", f.seed, "Master seed (default: $ROTSIM_SEED or the input file)");
    cmd->add_option("--fidelity", f.fidelity, "paper (>= 1e6 symbols per point) or quick")
        ->check(CLI::IsMember({"paper", "quick"}));
}

std::optional<std::uint64_t> resolve_seed(const CommonFlags& f)
{
    if (f.seed) {
        return f.seed;
    }
    return env_number("ROTSIM_SEED");
}

int cmd_simulate(const std::string& plan_path, const std::string& out_dir, const CommonFlags& f)
{
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.started = utc_timestamp();
    std::string text;
    ExperimentPlan plan;
    try {
        text = read_text_file(plan_path);
        plan = parse_plan(text);
        if (!f.fidelity.empty()) {
            plan.fidelity = parse_fidelity(f.fidelity);
        }
        if (auto s = resolve_seed(f)) {
            plan.seed = *s;
        }
        plan.validate();
    } catch (const PlanError& e) {
        std::cerr << plan_path << ": " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << plan_path << ": " << e.what() << "\n";
        return exit_input;
    }

    EngineOptions engine;
    engine.workers = f.workers ? f.workers : default_workers();
    engine.shards = f.shards;
    const auto points = plan.points();
    std::cerr << "simulating " << points.size() << " point(s), " << plan.symbols_per_point()
              << " symbols each, " << engine.workers << " worker(s)\n";
    const auto outcomes = run_sweep(plan, engine, [](std::size_t i, std::size_t n, const PointOutcome& o) {
        std::cerr << "[" << i << "/" << n << "] " << o.point.coordinates() << " rotation="
                  << o.point.rotation.to_text() << (o.report ? " ok" : " FAILED: " + o.error) << "\n";
    });

    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / "results.csv";
    std::ostringstream csv;
    write_csv(csv, outcomes);
    write_file(csv_path, csv.str());

    manifest.input_path = plan_path;
    manifest.input_hash = content_hash(text);
    manifest.seed = plan.seed;
    manifest.workers = engine.workers;
    manifest.fidelity = std::string(to_string(plan.fidelity));
    manifest.outputs = {csv_path.string()};
    for (const auto& o : outcomes) {
        if (!o.report) {
            manifest.errors.push_back(o.point.coordinates() + ";rotation=" + o.point.rotation.to_text()
                                      + ": " + o.error);
        }
    }
    manifest.finished = utc_timestamp();
    write_file(fs::path(out_dir) / "manifest.json", manifest.to_json());
    std::cerr << "wrote " << csv_path.string() << "\n";
    if (!manifest.errors.empty()) {
        std::cerr << manifest.errors.size() << " point(s) failed; see manifest.json\n";
        return exit_partial;
    }
    return exit_ok;
}

int cmd_optimize(const std::string& config_path, const std::string& out_dir, const CommonFlags& f)
{
    RunManifest manifest;
    manifest.command = "optimize";
    manifest.started = utc_timestamp();
    std::string text;
    OptimizerConfig cfg;
    try {
        text = read_text_file(config_path);
        cfg = parse_optimizer_config(text);
        if (!f.fidelity.empty()) {
            cfg.fidelity = parse_fidelity(f.fidelity);
        }
        if (auto s = resolve_seed(f)) {
            cfg.seed = *s;
        }
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return exit_input;
    }
    cfg.engine.workers = f.workers ? f.workers : default_workers();
    cfg.engine.shards = f.shards;

    OptimizationResult res;
    try {
        res = optimize_rotation(cfg);
    } catch (const std::exception& e) {
        std::cerr << "optimize: " << e.what() << "\n";
        return exit_failed;
    }

    fs::create_directories(out_dir);
    const fs::path trace_path = fs::path(out_dir) / "trace.csv";
    const fs::path result_path = fs::path(out_dir) / "result.json";
    std::ostringstream trace;
    write_trace_csv(trace, res);
    write_file(trace_path, trace.str());

    const auto recipe = RotationRecipe::givens4(res.angles);
    nlohmann::ordered_json j;
    j["rotation"] = recipe.to_text();
    j["recipe"] = nlohmann::json::parse(recipe.to_json());
    j["objective"] = std::string(to_string(cfg.objective));
    j["value"] = res.objective;
    j["stderr"] = res.objective_stderr;
    j["incumbent_index"] = res.incumbent_index;
    j["evaluations"] = res.trace.size();
    j["budget_exhausted"] = res.budget_exhausted;
    j["noisy_objective"] = res.noisy_objective;
    j["warnings"] = res.warnings;
    j["point"] = {{"N", cfg.point.channels},
                  {"M", cfg.point.qam},
                  {"snr_db", cfg.point.snr_db},
                  {"sigma2_p", cfg.point.sigma2_p},
                  {"receiver", std::string(to_string(cfg.point.receiver))},
                  {"symbols_per_eval", cfg.point.min_symbols},
                  {"seed", cfg.seed},
                  {"common_random_numbers", cfg.common_random_numbers}};
    j["metrics"] = {{"bler", res.report.bler()}, {"ser", res.report.ser()}, {"ber", res.report.ber()},
                    {"air", res.report.air()}};
    write_file(result_path, j.dump(2) + "\n");

    manifest.input_path = config_path;
    manifest.input_hash = content_hash(text);
    manifest.seed = cfg.seed;
    manifest.workers = cfg.engine.workers;
    manifest.fidelity = std::string(to_string(cfg.fidelity));
    manifest.outputs = {trace_path.string(), result_path.string()};
    manifest.finished = utc_timestamp();
    write_file(fs::path(out_dir) / "manifest.json", manifest.to_json());

    for (const auto& w : res.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << recipe.to_text() << "\n";
    std::cerr << to_string(cfg.objective) << " = " << res.objective << " +- " << res.objective_stderr
              << " after " << res.trace.size() << " evaluations\n";
    return exit_ok;
}

int cmd_selftest()
{
    const auto results = run_selftest();
    int failed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        failed += !r.passed;
    }
    std::cout << (failed ? std::to_string(failed) + " check(s) failed" : "all checks passed") << "\n";
    return failed ? exit_failed : exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Signal-rotation simulator for channels with residual phase noise"};
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);

    CommonFlags sim_flags;
    std::string plan_path;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Run every point of a plan; writes results.csv and manifest.json");
    sim->add_option("--plan", plan_path, "Plan file")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--shards", sim_flags.shards, "Partial-report count per point (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    add_common(sim, sim_flags);

    CommonFlags opt_flags;
    std::string config_path;
    std::string opt_out;
    auto* opt = app.add_subcommand("optimize", "Optimize four Givens angles; writes trace.csv, result.json");
    opt->add_option("--config", config_path, "Optimizer config file")->required();
    opt->add_option("--out", opt_out, "Output directory")->required();
    add_common(opt, opt_flags);

    auto* self = app.add_subcommand("selftest", "Run the built-in consistency checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(plan_path, sim_out, sim_flags);
        }
        if (opt->parsed()) {
            return cmd_optimize(config_path, opt_out, opt_flags);
        }
        if (self->parsed()) {
            return cmd_selftest();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failed;
    }
    return exit_ok;
}
