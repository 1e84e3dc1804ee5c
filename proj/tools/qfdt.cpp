// qfdt — quench-dynamics and fluctuation-dissipation toolkit, command line.
//
// Subcommands:
//   run <config>       execute an experiment, emit rows.csv + report.json
//   validate <config>  check a configuration without executing it
//   oracle-check       Monte-Carlo vs closed-form correlator suite
//   timedep <config>   emit a measured/free/predicted quench trace
//   cache clear|stats  manage the eigensystem cache
//
// stdout carries machine-readable JSON summaries; diagnostics go to stderr.
// Exit codes: 0 success, 1 validation failure, 2 runtime failure,
// 3 oracle-check failure.

#include "qfdt/config.hpp"
#include "qfdt/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using qfdt::experiments::ExperimentSpec;

struct GlobalOptions {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out_dir;
    double budget_gb = 0.0;
};

void apply_overrides(ExperimentSpec& spec, const GlobalOptions& opts) {
    if (opts.seed_set) spec.ensemble.seed = opts.seed;
    if (opts.threads > 0) spec.threads = opts.threads;
    if (!opts.out_dir.empty()) spec.output.out_dir = opts.out_dir;
    if (opts.budget_gb > 0.0) spec.budget.max_gb = opts.budget_gb;
    if (const char* env = std::getenv("QFDT_CACHE_DIR"); env != nullptr && *env != '\0') {
        spec.output.cache_dir = env;
    }
}

std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("QFDT_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
        return std::filesystem::path(home) / ".cache" / "qfdt";
    }
    return std::filesystem::path(".qfdt-cache");
}

int run_command(const std::string& config_path, const GlobalOptions& opts, bool series_only) {
    ExperimentSpec spec;
    try {
        spec = qfdt::config::to_experiment_spec(qfdt::config::parse_file(config_path));
        apply_overrides(spec, opts);
        if (series_only && spec.model.kind != qfdt::experiments::Kind::time_dependence) {
            throw std::invalid_argument("timedep requires kind = time_dependence");
        }
        spec.validate();
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
    try {
        const auto report = qfdt::experiments::run_experiment(spec);
        std::filesystem::create_directories(spec.output.out_dir);
        const auto csv_path = spec.output.out_dir / "rows.csv";
        const auto json_path = spec.output.out_dir / "report.json";
        report.write_csv(csv_path);
        report.write_json(json_path);

        nlohmann::json summary;
        summary["status"] = "ok";
        summary["kind"] = qfdt::experiments::to_string(report.kind);
        summary["rows"] = report.rows.size();
        summary["out_dir"] = spec.output.out_dir.string();
        if (series_only && !report.rows.empty()) {
            summary["gamma_fit"] = report.rows.front().gamma_fit;
            summary["delta2_measured"] = report.rows.front().delta2_measured;
        }
        std::cout << summary.dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

int validate_command(const std::string& config_path, const GlobalOptions& opts) {
    try {
        auto spec = qfdt::config::to_experiment_spec(qfdt::config::parse_file(config_path));
        apply_overrides(spec, opts);
        spec.validate();
        nlohmann::json summary;
        summary["status"] = "ok";
        summary["kind"] = qfdt::experiments::to_string(spec.model.kind);
        summary["memory_estimate_gb"] = spec.memory_estimate_bytes() / 1073741824.0;
        std::cout << summary.dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
}

int oracle_command(long n, int realizations, double g, std::uint64_t seed) {
    try {
        const auto report = qfdt::experiments::oracle_suite(n, realizations, g, seed);
        for (const auto& check : report.checks) {
            std::cerr << (check.pass ? "  ok  " : " FAIL ") << check.label
                      << "  empirical=" << check.empirical << " theory=" << check.theory
                      << " n_sigma=" << check.n_sigma << "\n";
        }
        nlohmann::json summary;
        summary["status"] = report.all_pass ? "pass" : "fail";
        summary["n"] = report.dimension;
        summary["realizations"] = report.realizations;
        summary["g"] = report.g;
        double max_sigma = 0.0;
        int failed = 0;
        for (const auto& check : report.checks) {
            max_sigma = std::max(max_sigma, check.n_sigma);
            if (!check.pass) ++failed;
        }
        summary["checks"] = report.checks.size();
        summary["failed"] = failed;
        summary["max_n_sigma"] = max_sigma;
        std::cout << summary.dump() << "\n";
        return report.all_pass ? 0 : 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

int cache_command(const std::string& action, const std::string& dir_flag) {
    const std::filesystem::path dir =
        dir_flag.empty() ? default_cache_dir() : std::filesystem::path(dir_flag);
    nlohmann::json summary;
    summary["dir"] = dir.string();
    if (action == "stats") {
        const auto s = qfdt::cache::stats(dir);
        summary["files"] = s.files;
        summary["bytes"] = s.bytes;
    } else if (action == "clear") {
        summary["removed"] = qfdt::cache::clear(dir);
    } else {
        std::cerr << "cache action must be 'clear' or 'stats'\n";
        return 1;
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quench-dynamics and fluctuation-dissipation toolkit"};
    app.set_version_flag("--version", qfdt::kVersion);
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOptions opts;
    app.add_option("--seed", opts.seed, "override the ensemble seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    app.add_option("--threads", opts.threads, "bound worker parallelism");
    app.add_option("--out-dir", opts.out_dir, "override the output directory");
    app.add_option("--budget-gb", opts.budget_gb, "override the memory budget");

    std::string config_path;
    auto* run = app.add_subcommand("run", "execute an experiment from a config file");
    run->add_option("config", config_path, "configuration file")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a config without executing");
    validate->add_option("config", validate_path, "configuration file")->required();

    long oracle_n = 256;
    int oracle_realizations = 200;
    double oracle_g = 0.1;
    std::uint64_t oracle_seed = 7;
    auto* oracle = app.add_subcommand("oracle-check", "correlator theory vs Monte-Carlo suite");
    oracle->add_option("--n", oracle_n, "matrix dimension");
    oracle->add_option("--realizations", oracle_realizations, "ensemble size");
    oracle->add_option("--g", oracle_g, "perturbation strength");
    oracle->add_option("--seed", oracle_seed, "ensemble seed");

    std::string timedep_path;
    auto* timedep = app.add_subcommand("timedep", "emit measured/free/predicted quench traces");
    timedep->add_option("config", timedep_path, "configuration file")->required();

    std::string cache_action;
    std::string cache_dir;
    auto* cache = app.add_subcommand("cache", "manage the eigensystem cache");
    cache->add_option("action", cache_action, "clear or stats")->required();
    cache->add_option("--dir", cache_dir, "cache directory (default: QFDT_CACHE_DIR)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return run_command(config_path, opts, false);
    if (validate->parsed()) return validate_command(validate_path, opts);
    if (oracle->parsed()) {
        return oracle_command(oracle_n, oracle_realizations, oracle_g, oracle_seed);
    }
    if (timedep->parsed()) return run_command(timedep_path, opts, true);
    if (cache->parsed()) return cache_command(cache_action, cache_dir);
    return 1;
}
