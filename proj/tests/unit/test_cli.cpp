#include "catch_amalgamated.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fracp_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = std::string("\"") + FRACP_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(log);
    return r;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "config.json";
    std::ofstream(path) << text;
    return path;
}

const char* kEvolve = R"cfg({
  "experiment": "evolve",
  "seed": 3,
  "domain": {"x_left": -1.0, "x_right": 1.0, "M": 32},
  "params": {"p": 1.5, "s": 0.5},
  "problem": {"T_final": 0.02, "initial": "bump(0, 0.5)"},
  "stepper": {"dt": 0.005}
})cfg";

} // namespace

TEST_CASE("empty domain is a validation error", "[cli]") {
    const fs::path dir = scratch("empty");
    const fs::path cfg = write_config(dir, R"cfg({"experiment": "evolve", "domain": {"x_left": 0, "x_right": 0, "M": 16}})cfg");
    const Run r = cli("evolve --config \"" + cfg.string() + "\" --output-dir \"" + (dir / "out").string() + "\"", dir);
    CHECK(r.code == 3);
    const json err = json::parse(slurp(dir / "out" / "error.json"));
    CHECK(err["error"]["kind"] == "validation");
    CHECK(err.contains("config_hash"));
    CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("malformed input is a parse error", "[cli]") {
    const fs::path dir = scratch("parse");
    const fs::path cfg = write_config(dir, "{\"experiment\": ");
    CHECK(cli("evolve --config \"" + cfg.string() + "\"", dir).code == 2);
    CHECK(cli("no-such-experiment", dir).code == 2);
    CHECK(cli("", dir).code == 2);
    CHECK(cli("verify-inequalities --samples many", dir).code == 2);
    std::string text = kEvolve;
    text.replace(text.find("bump(0, 0.5)"), 12, "sin(x)");
    const fs::path bad = write_config(dir, text);
    const Run r = cli("evolve --config \"" + bad.string() + "\" --output-dir \"" + (dir / "out").string() + "\"", dir);
    CHECK(r.code == 2);
    CHECK(json::parse(slurp(dir / "out" / "error.json"))["error"]["kind"] == "config_parse");
}

TEST_CASE("mismatched experiment name is rejected", "[cli]") {
    const fs::path dir = scratch("mismatch");
    const fs::path cfg = write_config(dir, kEvolve);
    CHECK(cli("sobolev --config \"" + cfg.string() + "\" --output-dir \"" + (dir / "out").string() + "\"", dir).code ==
          3);
}

TEST_CASE("runs are deterministic and every file carries the hash", "[cli]") {
    const fs::path dir = scratch("determinism");
    const fs::path cfg = write_config(dir, kEvolve);
    const std::string out = (dir / "out").string();
    const Run a = cli("evolve --config \"" + cfg.string() + "\" --output-dir \"" + out + "\" --plot", dir);
    REQUIRE(a.code == 0);
    const std::string first = slurp(dir / "out" / "summary.json");
    const std::string first_csv = slurp(dir / "out" / "trajectory.csv");
    const Run b = cli("evolve --config \"" + cfg.string() + "\" --output-dir \"" + out + "\" --plot", dir);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "out" / "summary.json") == first);
    CHECK(slurp(dir / "out" / "trajectory.csv") == first_csv);

    const json summary = json::parse(first);
    const std::string hash = summary["config_hash"];
    CHECK(hash.size() == 16);
    CHECK(summary["experiment"] == "evolve");
    CHECK(summary["seed"] == 3);
    bool saw_plot = false;
    for (const auto& f : summary["files"]) {
        const std::string name = f;
        saw_plot = saw_plot || name == "plot.py";
        INFO(name);
        CHECK(slurp(dir / "out" / name).rfind("# config_hash=" + hash + "\n", 0) == 0);
    }
    CHECK(saw_plot);

    // The output location does not enter the hash.
    const Run c = cli("evolve --config \"" + cfg.string() + "\" --output-dir \"" + (dir / "elsewhere").string() +
                          "\" --plot",
                      dir);
    REQUIRE(c.code == 0);
    CHECK(json::parse(slurp(dir / "elsewhere" / "summary.json"))["config_hash"] == hash);
}

TEST_CASE("inequality battery reports no violations", "[cli]") {
    const fs::path dir = scratch("ineq");
    for (const char* args : {"--p 1.5 --alpha 1.0", "--p 3 --alpha 0.5", "--p 1.1 --alpha 2"}) {
        INFO(args);
        const Run r = cli(std::string("verify-inequalities --samples 5000 ") + args + " --output-dir \"" +
                              (dir / "out").string() + "\"",
                          dir);
        REQUIRE(r.code == 0);
        const json summary = json::parse(slurp(dir / "out" / "summary.json"));
        CHECK(summary["results"]["violations"] == 0);
        CHECK(summary["checks_passed"] == true);
    }
}

TEST_CASE("kernel subcommand evaluates the requested grid", "[cli]") {
    const fs::path dir = scratch("kernel");
    const Run r = cli("kernel --N 3 --theta 0.5 --sigma-grid 0,2 --output-dir \"" + (dir / "out").string() + "\"", dir);
    REQUIRE(r.code == 0);
    const json summary = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["inputs"]["kernel"]["sigma"] == json::array({0.0, 2.0}));
}
