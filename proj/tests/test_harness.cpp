#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "slipns/harness.hpp"

using namespace slipns;
namespace fs = std::filesystem;

namespace {

const char* kRest = R"([run]
name = rest_small
[grid]
nx = 16
ny = 16
nz = 16
[physics]
nu = 0.1
gamma = 1
[scenario]
name = rest
[time]
dt = 0.01
T = 0.04
[probes]
names = c
[probe c]
x0 = 0.5 0.5 0.5
rho1 = 0.15
rho2 = 0.3
quadrature = 2 2 4
[checks]
run = none
)";

std::string without(const std::string& text, const std::string& line) {
    std::string s = text;
    s.erase(s.find(line), line.size() + 1);
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("slipns_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing: defaults, errors naming the field or line") {
    std::string rest = kRest;
    const ExperimentConfig c = parse_config(rest);
    CHECK(c.nx == 16);
    CHECK(c.Lx == 1.0);
    CHECK(c.scenario == "rest");
    CHECK(c.selected.empty());
    CHECK(c.ledger_eps == doctest::Approx(0.004));
    CHECK(c.probes.size() == 1);

    CHECK_THROWS_WITH_AS(parse_config(without(rest, "nu = 0.1")), doctest::Contains("[physics] nu"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[grid2]\nx = 1\n"), doctest::Contains("unknown section [grid2]"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[output]\nvtk = 1\n"), doctest::Contains("[output] vtk"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[tolerances]\ndrift = -1\n"), doctest::Contains("[tolerances] drift"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[tolerances]\nnot_a_tol = 1\n"), doctest::Contains("not_a_tol"), config_error);
    std::string bad = rest;
    bad.replace(bad.find("nu = 0.1"), 8, "nu = fast");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("[physics] nu = 'fast'"), config_error);
    bad = rest;
    bad.replace(bad.find("name = rest\n[time]"), 11, "name = vortex");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("not a registered scenario"), config_error);
    bad = rest;
    bad.replace(bad.find("names = c"), 9, "names = c, d");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("[probe d]"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[probe e]\nx0 = 0 0 0\n"), doctest::Contains("not listed"), config_error);
    // a line without '=' is a syntax error reported with its line number
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nnx = 4\nthis line is broken\n"), doctest::Contains("line 3"), config_error);
    CHECK_THROWS_WITH_AS(parse_config(rest + "[checks]\nrun = 11\n"), doctest::Contains("duplicate"), config_error);
    bad = rest;
    bad.replace(bad.find("run = none"), 10, "run = 11");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("unknown check '11'"), config_error);
    bad = rest;
    bad.replace(bad.find("run = none"), 10, "run = 2, 5");
    CHECK(parse_config(bad).selected == std::set<int>{2, 5});
}

TEST_CASE("list of checks: ten rows, stable, anchors present") {
    const std::string a = list_checks(), b = list_checks();
    CHECK(a == b);
    CHECK(std::count(a.begin(), a.end(), '\n') == 10);
    CHECK(a.find("(4.3)") != std::string::npos);
    int expect = 1;
    for (const auto& s : check_registry()) {
        CHECK(s.id == expect++);
        CHECK_FALSE(s.tag.empty());
    }
}

TEST_CASE("rest run: zero ledgers, every check listed once, deterministic files") {
    const ExperimentConfig c = parse_config(kRest);
    const fs::path d1 = scratch("rest1"), d2 = scratch("rest2");
    const RunReport r1 = run(c, d1);
    const RunReport r2 = run(c, d2);
    CHECK(r1.passed);
    REQUIRE(r1.checks.size() == check_registry().size());
    for (std::size_t n = 0; n < r1.checks.size(); ++n) CHECK(r1.checks[n].id == int(n) + 1);
    for (const auto& s : r1.stages) CHECK(s.status == "ok");
    const auto& L = r1.json["ledgers"];
    CHECK(L["energy"]["kinetic_final"].get<double>() == 0.0);
    CHECK(L["pressure"]["sup_p1_l2"].get<double>() == 0.0);
    CHECK(L["pressure"]["sum_p22_l2_pow4/3"].get<double>() == 0.0);
    for (double x : L["regularity"]["p_l4_by_order"]) CHECK(x == 0.0);
    for (double x : L["regularity"]["dtu_l4_by_order"]) CHECK(x == 0.0);
    CHECK(r1.json["probes"][0]["grad_p_e"].get<double>() == 0.0);
    for (const char* f : {"energy.csv", "pressure_ledger.csv", "regularity.csv", "probes.txt", "report.json", "report.txt"}) {
        CHECK(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    CHECK(r1.json["provenance"]["config_hash"].get<std::string>() == c.hash_hex());

    // export replays the stored config into a VTK series
    CHECK(export_run(d1) == 2);  // step 0 and the last step at the default stride
    CHECK(slurp(d1 / "vtk" / "flow_00004.vtk").find("DIMENSIONS 17 17 17") != std::string::npos);
    {
        std::ofstream f(d1 / "config.ini", std::ios::app);
        f << "; edited\n";
    }
    CHECK_THROWS_WITH_AS(export_run(d1), doctest::Contains("config hash"), config_error);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("stage failures skip the dependent stages; failing checks fail the run") {
    std::string text = kRest;
    text.replace(text.find("name = rest\n[time]"), 11, "name = taylor_green\namplitude = 500");
    const fs::path d = scratch("cfl");
    const RunReport r = run(parse_config(text), d);
    CHECK_FALSE(r.passed);
    REQUIRE(r.stages.size() == 4);
    CHECK(r.stages[0].status == "failed");
    CHECK(r.stages[0].detail.find("CFL") != std::string::npos);
    CHECK(r.stages[1].status == "skipped");
    CHECK(r.stages[3].status == "skipped");

    text = kRest;
    text.replace(text.find("run = none"), 10, "run = 4\n[tolerances]\nmean = 1e-300");
    // gauge check holds its equalities exactly, so a tiny tolerance elsewhere does not matter
    CHECK(run(parse_config(text), d).passed);
    text = kRest;
    text.replace(text.find("run = none"), 10, "run = 1\n[tolerances]\npoiseuille_rel = 1e-9");
    const RunReport f = run(parse_config(text), d);
    CHECK_FALSE(f.passed);
    CHECK(f.json["checks"][0]["status"] == "fail");
    CHECK(f.json["checks"][1]["status"] == "skipped");
    fs::remove_all(d);
}

TEST_CASE("environment overrides") {
    const ExperimentConfig c = parse_config(kRest);
    CHECK(resolve_output_dir(c) == fs::path("runs/rest_small"));
    setenv("SLIPNS_OUTPUT_DIR", "/tmp/elsewhere", 1);
    CHECK(resolve_output_dir(c) == fs::path("/tmp/elsewhere"));
    unsetenv("SLIPNS_OUTPUT_DIR");
    setenv("SLIPNS_THREADS", "2", 1);
    CHECK(resolve_threads() == 2);
    setenv("SLIPNS_THREADS", "zero", 1);
    CHECK_THROWS_AS(resolve_threads(), config_error);
    unsetenv("SLIPNS_THREADS");
    CHECK(resolve_threads() == 1);
}
