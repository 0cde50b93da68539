#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftlab/cli.hpp"
#include "driftlab/config.hpp"
#include "driftlab/errors.hpp"

using namespace driftlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing reports every problem at once") {
    Config c = Config::from_ini("[a]\nx = 1\ny = abc\nz = 2\n[b]\nw = 1/4\n");
    CHECK(c.num("a", "x", 0) == 1.0);
    CHECK(c.num("a", "y", 5.0) == 5.0);
    CHECK(c.num("b", "w", 0) == 0.25);
    try {
        c.finish();
        FAIL("expected ConfigInvalid");
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::ConfigInvalid);
        const std::string msg = e.what();
        CHECK(msg.find("a.y") != std::string::npos);
        CHECK(msg.find("a.z: unknown key") != std::string::npos);
    }
}

TEST_CASE("JSON and INI configs are equivalent") {
    Config a = Config::from_ini("[s]\nlist = 1, 2, 3\nflag = yes\n");
    Config b = Config::from_json(nlohmann::json::parse(R"({"s": {"list": [1, 2, 3], "flag": true}})"));
    CHECK(a.list("s", "list", {}) == b.list("s", "list", {}));
    CHECK(a.flag("s", "flag", false) == b.flag("s", "flag", false));
    CHECK_THROWS_AS(Config::from_ini("[s\nx=1"), LabError);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ErrorKind::ConfigInvalid) == kExitValidation);
    CHECK(exit_code_for(ErrorKind::InvalidParams) == kExitValidation);
    CHECK(exit_code_for(ErrorKind::NonIntegrableSingularity) == kExitRuntime);
}

TEST_CASE("unknown keys and kinds are validation errors") {
    RunOptions o{"unit_cli_tmp", std::nullopt, 1, false};
    Config c = Config::from_ini("[experiment]\ncheck = barrier\n[barrier]\nd = 2\nmembers = 1:1\nextra_members = 2:2\nbogus = 1\n");
    CHECK_THROWS_AS(run_experiment("verify", c, o), LabError);
    Config c2 = Config::from_ini("[experiment]\ncheck = nothing\n");
    CHECK_THROWS_AS(run_experiment("verify", c2, o), LabError);
    fs::remove_all("unit_cli_tmp");
}

TEST_CASE("runs write reports and a manifest and replay byte for byte") {
    const std::string cfg = "[experiment]\ncheck = barrier\nseed = 5\n[barrier]\nd = 2\nmembers = 1:1, 2:1\nextra_members = 2:2\nradii = 0.5, 1\np = 3\nq = 3\n";
    RunOptions o{"unit_cli_a", std::nullopt, 1, true};
    const RunResult r = run_experiment("verify", Config::from_ini(cfg), o);
    CHECK(r.exit_code == kExitOk);
    for (const char* f : {"report.json", "report.csv", "report.txt", "manifest.json", "config.ini", "report_sweep.svg"})
        CHECK(fs::exists(fs::path("unit_cli_a") / f));
    const auto m = nlohmann::json::parse(slurp("unit_cli_a/manifest.json"));
    CHECK(m["seed"] == 5);
    CHECK(m["config"]["barrier"]["members"] == "1:1, 2:1");

    RunOptions o2{"unit_cli_b", std::nullopt, 3, false};
    std::vector<std::string> diff;
    CHECK(replay("unit_cli_a", o2, &diff));
    CHECK(diff.empty());
    fs::remove_all("unit_cli_a");
    fs::remove_all("unit_cli_b");
}

TEST_CASE("seed flag overrides the config and is echoed") {
    const std::string cfg = "[experiment]\ncheck = modulus\nseed = 5\n[modulus]\npaths = 200\ndt = 0.01\ngaps = 0.25, 0.5\n";
    RunOptions o{"unit_cli_seed", std::uint64_t{11}, 2, false};
    run_experiment("verify", Config::from_ini(cfg), o);
    const auto m = nlohmann::json::parse(slurp("unit_cli_seed/manifest.json"));
    CHECK(m["seed"] == 11);
    CHECK(slurp("unit_cli_seed/config.ini").find("seed = 11") != std::string::npos);
    fs::remove_all("unit_cli_seed");
}

TEST_CASE("path budget clamps and is flagged") {
    const std::string cfg = "[experiment]\ncheck = modulus\n[modulus]\npaths = 5000\ndt = 0.01\ngaps = 0.25, 0.5\n[budget]\nmax_paths = 100\n";
    RunOptions o{"unit_cli_budget", std::nullopt, 1, false};
    const RunResult r = run_experiment("verify", Config::from_ini(cfg), o);
    CHECK(r.reports.at(0).summary["budget_exceeded"] == true);
    CHECK(r.reports.at(0).summary["paths"] == 100);
    fs::remove_all("unit_cli_budget");
}
