#include "doctest.h"

#include "backlab/cli.hpp"
#include "backlab/report.hpp"
#include "backlab/sweep.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace backlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("backlab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int lab(std::vector<std::string> args) {
    args.insert(args.begin(), "lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream sink;
    auto* o = std::cout.rdbuf(sink.rdbuf());
    auto* e = std::cerr.rdbuf(sink.rdbuf());
    int code = lab_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(o);
    std::cerr.rdbuf(e);
    return code;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("every registered scenario has a valid default config") {
    CHECK(scenario_registry().size() == 14);
    for (const auto& s : scenario_registry()) {
        ScenarioConfig c = default_config(s.id);
        ScenarioConfig back = parse_config(to_json(c));
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("config validation") {
    json j = to_json(default_config("hyperns-eigenflow"));
    CHECK_NOTHROW(parse_config(j));
    json bad = j;
    bad["model"]["bogus"] = 1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["extra"] = json::object();
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["model"]["nu"] = "fast";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["seed"] = -1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = j;
    bad["scenario"] = "nope";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    // Partial configs are completed from the defaults; integers coerce to doubles.
    ScenarioConfig p = parse_config({{"scenario", "hyperns-eigenflow"}, {"model", {{"nu", 2}}}});
    CHECK(p.num("model", "nu") == 2.0);
    CHECK(p.integer("grid", "n") == 32);
}

TEST_CASE("config hash semantics") {
    ScenarioConfig a = default_config("kdv-backward-bounded");
    ScenarioConfig b = a;
    b.output = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(with_value(a, "model.beta", 2.0)) != config_hash(a));
    CHECK(config_hash(with_value(a, "model.beta", 1.0)) == config_hash(a));
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK_THROWS_AS(with_value(a, "model.missing", 1.0), ConfigError);
    CHECK_THROWS_AS(with_value(a, "nodot", 1.0), ConfigError);
}

TEST_CASE("generic data") {
    auto g = make_grid(1, 64, 2 * std::numbers::pi);
    Field u = generic_data(g, 3.0, 0.05, 11);
    CHECK(l2_norm(u) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(std::abs(to_spectral(u).values[0]) < 1e-14);
    CHECK(l2_norm(generic_data(g, 3.0, 0.05, 12)) == doctest::Approx(3.0));
    // The random draw does not depend on N once the band fits on both grids.
    Field a = to_spectral(generic_data(g, 1.0, 0.5, 5, 10));
    Field b = to_spectral(generic_data(make_grid(1, 128, 2 * std::numbers::pi), 1.0, 0.5, 5, 10));
    for (int j = 1; j <= 10; ++j) CHECK(std::abs(a.values[j] - b.values[j]) < 1e-14);
}

TEST_CASE("sweep spec parsing and size guard") {
    json base = to_json(default_config("hyperns-eigenflow"));
    json spec = {{"base", base}, {"axes", {{{"path", "model.nu"}, {"values", {0.5, 1.0}}}}}};
    SweepSpec s = parse_sweep(spec);
    CHECK(sweep_size(s) == 2);
    json four = spec;
    for (const char* p : {"grid.n", "grid.L", "integrator.dt"})
        four["axes"].push_back({{"path", p}, {"values", {1.0}}});
    CHECK_THROWS_AS(parse_sweep(four), ConfigError);
    json big = spec;
    std::vector<double> many(101, 1.0);
    big["axes"] = {{{"path", "model.nu"}, {"values", many}}, {{"path", "integrator.dt"}, {"values", many}}};
    CHECK_THROWS_AS(parse_sweep(big), ConfigError);
    json wrong = spec;
    wrong["axes"][0]["path"] = "model.unknown";
    CHECK_THROWS_AS(parse_sweep(wrong), ConfigError);
    double e = 0;
    CHECK(radius_bound_exponent("grid.L", e));
    CHECK(e == 2.5);
    CHECK(radius_bound_exponent("model.nu", e));
    CHECK(e == -2.0);
    CHECK_FALSE(radius_bound_exponent("model.tau", e));
}

TEST_CASE("single-cell sweep equals run_scenario") {
    fs::path dir = scratch("single");
    ScenarioConfig c = with_value(default_config("hyperns-eigenflow"), "integrator.t_end", 0.2);
    c.output = (dir / "direct").string();
    RunManifest m = run_scenario(c);
    SweepSpec s;
    s.base = c;
    s.base.output = (dir / "sweep").string();
    s.axes = {{"model.nu", {1.0}}};
    s.threads = 1;
    SweepResult r = run_sweep(s);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].ok);
    CHECK(r.cells[0].manifest.config_hash == m.config_hash);
    CHECK(r.cells[0].manifest.metrics == m.metrics);
    CHECK(r.fits.empty());
}

TEST_CASE("manifest persistence and report") {
    fs::path dir = scratch("report");
    ReportBundle empty = emit_report({}, (dir / "empty").string());
    CHECK(empty.failures == 0);
    CHECK(fs::exists(dir / "empty" / "report.json"));

    ScenarioConfig c = with_value(default_config("hyperns-eigenflow"), "integrator.t_end", 0.2);
    c.output = (dir / "runs").string();
    RunManifest m = run_scenario(c);
    CHECK(m.pass);
    CHECK(m.version == kArtifactVersion);
    CHECK(m.files.back() == "manifest.json");
    for (const auto& f : m.files) CHECK(fs::exists(fs::path(m.directory) / f));
    RunManifest back = manifest_from_json(read_json_file((fs::path(m.directory) / "manifest.json").string()));
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.metrics == m.metrics);

    auto ms = collect_manifests({(dir / "runs").string()});
    REQUIRE(ms.size() == 1);
    ReportBundle b = emit_report(ms, (dir / "out").string());
    CHECK(b.failures == 0);
    CHECK(b.summary["runs"].size() == 1);

    fs::remove(fs::path(m.directory) / "series.csv");
    CHECK_THROWS_AS(emit_report(collect_manifests({(dir / "runs").string()}), (dir / "out2").string()), IoError);
    CHECK_THROWS_AS(collect_manifests({(dir / "absent").string()}), IoError);
}

TEST_CASE("cli exit codes") {
    fs::path dir = scratch("cli");
    CHECK(lab({"frobnicate"}) == 2);
    CHECK(lab({}) == 2);
    CHECK(lab({"list"}) == 0);
    CHECK(lab({"report", dir.string(), "--out", (dir / "rep").string()}) == 0);
    CHECK(lab({"report", (dir / "missing").string()}) == 3);
    json bad = to_json(default_config("hyperns-eigenflow"));
    bad["grid"]["n"] = "many";
    write_text_atomic((dir / "bad.json").string(), bad.dump());
    CHECK(lab({"run", (dir / "bad.json").string()}) == 2);
    json invalid = to_json(default_config("hyperns-eigenflow"));
    invalid["grid"]["n"] = 30;  // not a power of two
    write_text_atomic((dir / "invalid.json").string(), invalid.dump());
    CHECK(lab({"run", (dir / "invalid.json").string(), "--output", (dir / "o").string()}) == 2);
    CHECK(lab({"accept", "--only", "3", "--work", (dir / "acc").string()}) == 0);
}

}
