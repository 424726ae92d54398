#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qdiff/harness/config.hpp"
#include "qdiff/harness/runner.hpp"
#include "qdiff/harness/table.hpp"

using namespace qdiff;
using namespace qdiff::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qdiff_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> collect_errors(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

std::string tk_config(const fs::path& out) {
    return "[experiment]\nname = tk\noutput_dir = " + out.string() +
           "\n[lattice]\nd = 1\nL = 8\nlambda = 0.3\n[time]\ntimes = 0.5, 1\n";
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config: minimal file round-trips") {
    const ExperimentConfig c = parse_config("[experiment]\nname = theta\n");
    CHECK(c.name == "theta");
    CHECK(parse_config(serialize_config(c)) == c);

    ExperimentConfig full = c;
    full.energies = {-1.5, 0.1, 1.0 / 3.0};
    full.q = std::numeric_limits<double>::infinity();
    full.seeds = {1, 2, 18446744073709551615ULL};
    full.checkpoints = {2, 3};
    full.lambda = 0.1 + 0.2;
    CHECK(parse_config(serialize_config(full)) == full);
    CHECK(config_hash(full) == config_hash(parse_config(serialize_config(full))));
    CHECK(config_hash(full) != config_hash(c));
    CHECK(config_hash(c).size() == 16);
}

TEST_CASE("config: unknown keys suggest the nearest name") {
    const auto errs = collect_errors("[experiment]\nname = theta\n[lattice]\nlamda = 0.2\n");
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("lamda") != std::string::npos);
    CHECK(errs[0].find("did you mean 'lambda'") != std::string::npos);

    const auto wrong_section = collect_errors("[experiment]\nname = theta\n[lattice]\neta = 0.2\n");
    CHECK(any_contains(wrong_section, "[spectral]"));
    CHECK(any_contains(collect_errors("[experimnt]\nname = theta\n"), "experiment"));
}

TEST_CASE("config: every violation is reported with its key") {
    const auto errs = collect_errors("[experiment]\nname = theta\n[spectral]\neta = -0.1\n[lattice]\nL = 1\nd = x\n");
    CHECK(any_contains(errs, "eta > 0"));
    CHECK(any_contains(errs, "spectral.eta"));
    CHECK(any_contains(errs, "lattice.L"));
    CHECK(any_contains(errs, "lattice.d: expected an integer"));
    CHECK(errs.size() >= 3);
    CHECK(any_contains(collect_errors("[experiment]\nname = theta\nname = tk\n"), "duplicate"));
    CHECK(any_contains(collect_errors("[experiment]\nname = kinetic\n"), "time.times"));
    CHECK(any_contains(collect_errors("[experiment]\nname = deloc\n[spectral]\neta = 0.5\n"), "spectral.eta"));
}

TEST_CASE("config: unknown experiment lists the registry") {
    const auto errs = collect_errors("[experiment]\nname = unknown\n");
    REQUIRE(errs.size() == 1);
    for (const auto& e : experiment_registry()) CHECK(errs[0].find(e.name) != std::string::npos);
    CHECK(experiment_registry().size() == 13);
}

TEST_CASE("levenshtein") {
    CHECK(levenshtein("lamda", "lambda") == 1);
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("tables: header-only, one row round trip, non-finite handling") {
    const fs::path dir = scratch("tables");
    fs::create_directories(dir);
    ResultTable empty(std::vector<Column>{{"t", "time"}, {"value"}});
    emit_table(empty, dir / "empty.csv");
    CHECK(slurp(dir / "empty.csv") == "t (time),value (1)\n");

    ResultTable one(std::vector<Column>{{"x", "sites"}, {"label"}, {"count"}});
    one.add_row({0.1, std::string("a,\"b\""), 42LL});
    emit_table(one, dir / "one.csv");
    const std::string text = slurp(dir / "one.csv");
    CHECK(text.find('\r') == std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    const CsvData back = read_csv(dir / "one.csv");
    REQUIRE(back.rows.size() == 1);
    CHECK(std::strtod(back.rows[0][0].c_str(), nullptr) == 0.1);
    CHECK(back.rows[0][1] == "a,\"b\"");
    CHECK(back.rows[0][2] == "42");

    ResultTable strict(std::vector<Column>{{"v"}});
    CHECK_THROWS_AS(strict.add_row({std::numeric_limits<double>::infinity()}), ValidationError);
    ResultTable flagged(std::vector<Column>{{"v"}}, true);
    flagged.add_row({std::numeric_limits<double>::infinity()});
    flagged.add_row({1.0});
    emit_table(flagged, dir / "flagged.csv");
    CHECK(slurp(dir / "flagged.csv") == "v (1),nonfinite (flag)\ninf,1\n1,0\n");

    CHECK_THROWS_AS(ResultTable(std::vector<Column>{}), ValidationError);
    CHECK_THROWS_AS(one.add_row({1.0}), ValidationError);
    CHECK_THROWS_WITH_AS(emit_table(one, dir / "missing" / "x.csv"), doctest::Contains("missing"), std::runtime_error);
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("runner: tk smoke run, manifest, determinism") {
    const fs::path out = scratch("tk");
    const ExperimentConfig cfg = parse_config(tk_config(out));
    const RunManifest m = run_experiment(cfg);
    REQUIRE(fs::exists(out / "tk_residuals.csv"));
    CHECK(fs::exists(out / "summary.csv"));
    const auto j = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(j["config_hash"] == config_hash(cfg));
    CHECK(j.contains("version"));
    CHECK(j.contains("timings"));
    CHECK(j["files"].size() == m.files.size());
    const CsvData res = read_csv(out / "tk_residuals.csv");
    CHECK(res.rows.size() == 6);
    for (const auto& row : res.rows) CHECK(std::strtod(row[3].c_str(), nullptr) <= 1e-6);

    const std::string first = slurp(out / "tk_residuals.csv");
    const std::string summary = slurp(out / "summary.csv");
    run_experiment(cfg);
    CHECK(slurp(out / "tk_residuals.csv") == first);
    CHECK(slurp(out / "summary.csv") == summary);
}

TEST_CASE("runner: worker count does not change outputs") {
    const fs::path out = scratch("workers");
    const std::string text = "[experiment]\nname = tequation\noutput_dir = " + out.string() +
                             "\n[lattice]\nd = 2\nL = 16\nlambda = 0.3\n[spectral]\nE = 1\neta = 0.09\n"
                             "[sampling]\nseeds = 1, 2, 3\n";
    const ExperimentConfig cfg = parse_config(text);
    ::setenv("QDIFF_WORKERS", "1", 1);
    run_experiment(cfg);
    const std::string one = slurp(out / "tequation.csv");
    ::setenv("QDIFF_WORKERS", "3", 1);
    run_experiment(cfg);
    ::unsetenv("QDIFF_WORKERS");
    CHECK(slurp(out / "tequation.csv") == one);
}

TEST_CASE("runner: files stay inside the output directory") {
    const fs::path out = scratch("confined");
    run_experiment(parse_config(tk_config(out)));
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        const auto rel = fs::relative(e.path(), out);
        CHECK(rel.string().find("..") == std::string::npos);
    }
    const auto j = nlohmann::json::parse(slurp(out / "manifest.json"));
    for (const auto& f : j["files"]) CHECK(fs::path(f["path"].get<std::string>()).filename() == f["path"].get<std::string>());
}

TEST_CASE("runner: stage failure keeps partial outputs and names the stage") {
    const fs::path out = scratch("failure");
    // a 4-point momentum grid cannot resolve F at eta = 0.1
    ExperimentConfig cfg = parse_config("[experiment]\nname = theta\noutput_dir = " + out.string() +
                                        "\n[spectral]\nenergies = 1\netas = 0.1\n[numerics]\nresolution = 4\n");
    CHECK_THROWS_AS(run_experiment(cfg), NumericalError);
    REQUIRE(fs::exists(out / "manifest.json"));
    const auto j = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(j["failed_stage"] == "solve_theta");
    CHECK(j["error"].get<std::string>().size() > 0);
}

}
