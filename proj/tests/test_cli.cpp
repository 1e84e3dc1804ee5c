#include "qfdt/config.hpp"

#include "doctest.h"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qfdt;
namespace fs = std::filesystem;

namespace {

const char* kChainConfig = R"(
[model]
kind = spinchain_fdt
n_spins = 8
bz_s = 0.8
bx_b = 0.3
jx = 1
jx_sb = 0.4
jz_sb = 0.2

[ensemble]
n_initial_states = 2
seed = 13
)";

fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "qfdt_cli_test";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << text;
    return path;
}

#ifdef QFDT_BINARY
int run_binary(const std::string& args, std::string* stderr_text = nullptr) {
    const fs::path dir = fs::temp_directory_path() / "qfdt_cli_test";
    fs::create_directories(dir);
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd =
        std::string(QFDT_BINARY) + " " + args + " >/dev/null 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    if (stderr_text != nullptr) {
        std::ifstream in(err_file);
        std::stringstream ss;
        ss << in.rdbuf();
        *stderr_text = ss.str();
    }
    return WEXITSTATUS(status);
}
#endif

}  // namespace

TEST_CASE("config parsing accepts the documented grammar") {
    const auto cfg = config::parse(kChainConfig);
    CHECK(cfg.get("model", "kind") == "spinchain_fdt");
    CHECK(cfg.get("ensemble", "seed") == "13");
    CHECK(!cfg.has("model", "bz_b"));

    const auto spec = config::to_experiment_spec(cfg);
    CHECK(spec.model.kind == experiments::Kind::spinchain_fdt);
    CHECK(spec.model.chain.n_spins == 8);
    CHECK(spec.model.chain.b_z_s == 0.8);
    CHECK(spec.model.chain.n_m == 5);
    CHECK(spec.ensemble.seed == 13);
    CHECK(spec.ensemble.n_initial_states == 2);
}

TEST_CASE("config hash is stable and content sensitive") {
    const auto a = config::parse(kChainConfig);
    const auto b = config::parse(kChainConfig);
    CHECK(a.hash == b.hash);
    std::string changed = kChainConfig;
    changed.replace(changed.find("seed = 13"), 9, "seed = 14");
    CHECK(config::parse(changed).hash != a.hash);
    // comments and blank lines do not affect the hash
    CHECK(config::parse(std::string("# header comment\n") + kChainConfig).hash == a.hash);
}

TEST_CASE("config rejections name the offender") {
    CHECK_THROWS_WITH_AS(config::parse("[model]\nkind = rmt_fdt\nbogus_key = 1\n"),
                         doctest::Contains("bogus_key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(config::parse("[mystery]\nx = 1\n"), doctest::Contains("mystery"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(config::parse("[model]\nkind = rmt_fdt\nkind = rmt_fdt\n"),
                         doctest::Contains("duplicate"), std::invalid_argument);
    CHECK_THROWS_AS(config::parse("[model\nkind = rmt_fdt\n"), std::invalid_argument);
    CHECK_THROWS_AS(config::parse("kind = rmt_fdt\n"), std::invalid_argument);

    // missing required keys are reported by name
    CHECK_THROWS_WITH_AS(
        config::to_experiment_spec(config::parse("[model]\nkind = rmt_fdt\ndimension = 100\n")),
        doctest::Contains("g"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        config::to_experiment_spec(
            config::parse("[model]\nkind = rmt_fdt\ndimension = 100\ng = 0.1\n")),
        doctest::Contains("seed"), std::invalid_argument);
}

TEST_CASE("comma lists parse into sweeps") {
    const auto cfg = config::parse(
        "[model]\nkind = rmt_fdt\ndimension = 128\ng = 0.05, 0.1\n[ensemble]\nseed = 1\n");
    const auto spec = config::to_experiment_spec(cfg);
    CHECK(spec.model.g_list == std::vector<double>{0.05, 0.1});
}

#ifdef QFDT_BINARY

TEST_CASE("cli validate: exit codes and key names") {
    const auto good = write_temp("good.cfg", kChainConfig);
    CHECK(run_binary("validate " + good.string()) == 0);

    std::string no_g = "[model]\nkind = rmt_fdt\ndimension = 128\n[ensemble]\nseed = 1\n";
    const auto bad = write_temp("missing_g.cfg", no_g);
    std::string err;
    CHECK(run_binary("validate " + bad.string(), &err) == 1);
    CHECK(err.find("[model].g") != std::string::npos);

    CHECK(run_binary("validate /nonexistent/path.cfg") == 1);
}

TEST_CASE("cli validate never touches the filesystem") {
    const fs::path probe = fs::temp_directory_path() / "qfdt_cli_test" / "never_created";
    fs::remove_all(probe);
    std::string cfg = kChainConfig;
    cfg += "\n[output]\nout_dir = " + probe.string() + "\n";
    const auto path = write_temp("probe.cfg", cfg);
    CHECK(run_binary("validate " + path.string()) == 0);
    CHECK(!fs::exists(probe));
}

TEST_CASE("cli run produces rows.csv and report.json") {
    const fs::path out = fs::temp_directory_path() / "qfdt_cli_test" / "run_out";
    fs::remove_all(out);
    std::string cfg =
        "[model]\nkind = rmt_fdt\ndimension = 200\ng = 0.2\n"
        "[ensemble]\nn_realizations = 1\nseed = 4\n"
        "[analysis]\nwindow_samples = 200\n"
        "[output]\nout_dir = " + out.string() + "\n";
    const auto path = write_temp("run.cfg", cfg);
    CHECK(run_binary("run " + path.string()) == 0);
    CHECK(fs::exists(out / "rows.csv"));
    CHECK(fs::exists(out / "report.json"));

    std::ifstream in(out / "report.json");
    nlohmann::json doc = nlohmann::json::parse(in);
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["rows"].size() == 2);
    CHECK(doc["rows"][0].contains("gamma_fit"));
}

TEST_CASE("cli cache stats and clear") {
    const fs::path dir = fs::temp_directory_path() / "qfdt_cli_test" / "cache";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK(run_binary("cache stats --dir " + dir.string()) == 0);
    CHECK(run_binary("cache clear --dir " + dir.string()) == 0);
    CHECK(run_binary("cache frobnicate --dir " + dir.string()) == 1);
}

TEST_CASE("cli timedep rejects other kinds") {
    const auto good = write_temp("good2.cfg", kChainConfig);
    CHECK(run_binary("timedep " + good.string()) == 1);
}

TEST_CASE("cli oracle-check passes deterministically at production size") {
    CHECK(run_binary("oracle-check --n 256 --realizations 200 --seed 7") == 0);
}

#endif  // QFDT_BINARY
