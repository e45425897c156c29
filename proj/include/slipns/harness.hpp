// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "io.hpp"

namespace slipns {

inline constexpr const char* code_version = "slipns 0.1.0";

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NamedProbe {
    std::string name;
    ProbePoint probe;
    int every = 1;  ///< evaluate at every n-th stored step (the last is always included)
};

struct ExperimentConfig {
    std::string name;
    std::uint64_t seed = 1;
    int nx = 0, ny = 0, nz = 0;
    double Lx = 1, Ly = 1, H = 1;
    BoundaryData bd;
    std::string scenario;
    ScenarioParams params;
    double dt = 0, T = 0, cfl = 0.5;
    std::vector<NamedProbe> probes;
    Rational serrin_r{4}, serrin_s{6}, reg_r{8, 7}, reg_q{4, 3};
    double ledger_eps = 0;  ///< defaults to T / 10
    int alpha_max = 2;
    std::string output_dir;
    int vtk_every = 10;
    CheckOptions checks;
    std::set<int> selected;  ///< check ids to run
    std::string source_text;  ///< the config file bytes, hashed into the provenance stamp

    [[nodiscard]] std::uint32_t hash() const {
        boost::crc_32_type crc;
        crc.process_bytes(source_text.data(), source_text.size());
        return crc.checksum();
    }
    [[nodiscard]] std::string hash_hex() const {
        char b[16];
        std::snprintf(b, sizeof b, "%08x", hash());
        return b;
    }
    [[nodiscard]] Grid grid() const { return build_grid(nx, ny, nz, Lx, Ly, H); }
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"name", "seed"}},
        {"grid", {"nx", "ny", "nz", "Lx", "Ly", "H"}},
        {"physics", {"nu", "gamma"}},
        {"scenario", {"name", "amplitude", "G"}},
        {"time", {"dt", "T", "cfl"}},
        {"probes", {"names"}},
        {"exponents", {"serrin", "regularity"}},
        {"ledger", {"eps", "alpha_max"}},
        {"output", {"dir", "vtk_every"}},
        {"checks", {"run"}},
    };
    return s;
}

inline const std::set<std::string>& probe_keys() {
    static const std::set<std::string> k{"x0", "e", "rho1", "rho2", "degree", "quadrature", "every"};
    return k;
}

inline std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

class Reader {
public:
    Reader(const ptree& t, std::string section) : sec_(t.get_child_optional(section)), name_(std::move(section)) {}

    [[nodiscard]] bool present() const { return bool(sec_); }
    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
        if (!sec_) return std::nullopt;
        if (auto v = sec_->get_optional<std::string>(key)) return trim(*v);
        return std::nullopt;
    }
    [[nodiscard]] std::string field(const std::string& key) const { return "[" + name_ + "] " + key; }

    [[nodiscard]] std::string text(const std::string& key) const {
        auto v = raw(key);
        if (!v || v->empty()) throw config_error("config: missing required field " + field(key));
        return *v;
    }
    [[nodiscard]] std::string text(const std::string& key, const std::string& def) const { return raw(key) ? *raw(key) : def; }

    [[nodiscard]] double number(const std::string& key, std::optional<double> def = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (def) return *def;
            throw config_error("config: missing required field " + field(key));
        }
        return to_number(key, *v);
    }
    [[nodiscard]] long long integer(const std::string& key, std::optional<long long> def = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (def) return *def;
            throw config_error("config: missing required field " + field(key));
        }
        std::size_t pos = 0;
        long long x = 0;
        try {
            x = std::stoll(*v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != v->size()) throw config_error("config: " + field(key) + " = '" + *v + "' is not an integer");
        return x;
    }
    [[nodiscard]] std::vector<double> numbers(const std::string& key, std::size_t n, std::optional<std::vector<double>> def = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (def) return *def;
            throw config_error("config: missing required field " + field(key));
        }
        std::vector<double> out;
        std::stringstream in(*v);
        std::string tok;
        while (in >> tok) out.push_back(to_number(key, tok));
        if (out.size() != n) throw config_error("config: " + field(key) + " needs " + std::to_string(n) + " numbers");
        return out;
    }
    [[nodiscard]] double to_number(const std::string& key, const std::string& s) const {
        std::size_t pos = 0;
        double x = 0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size() || !std::isfinite(x)) throw config_error("config: " + field(key) + " = '" + s + "' is not a number");
        return x;
    }

private:
    boost::optional<const ptree&> sec_;
    std::string name_;
};

inline std::pair<Rational, Rational> exponent_pair(const Reader& r, const std::string& key, const char* def) {
    const auto parts = split(r.text(key, def), ',');
    if (parts.size() != 2) throw config_error("config: " + r.field(key) + " needs two exponents 'a, b'");
    try {
        return {Rational::parse(parts[0]), Rational::parse(parts[1])};
    } catch (const std::exception&) {
        throw config_error("config: " + r.field(key) + " has an unreadable exponent");
    }
}

}  // namespace detail

/// Parses and validates a config; errors name the line (syntax) or the field (content).
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config") {
    using detail::Reader;
    detail::ptree t;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error("config: " + origin + " line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [sec, body] : t) {
        if (body.empty() && !body.data().empty()) throw config_error("config: key '" + sec + "' outside any section");
        const bool probe = sec.rfind("probe ", 0) == 0;
        const auto it = detail::config_schema().find(sec);
        if (!probe && it == detail::config_schema().end() && sec != "tolerances") throw config_error("config: unknown section [" + sec + "]");
        for (const auto& [key, v] : body) {
            (void)v;
            const bool ok = sec == "tolerances" ? default_check_tolerances().count(key) > 0
                                                : probe ? detail::probe_keys().count(key) > 0 : it->second.count(key) > 0;
            if (!ok) throw config_error("config: unknown field [" + sec + "] " + key);
        }
    }

    ExperimentConfig c;
    c.source_text = text;
    const Reader run(t, "run"), grid(t, "grid"), phys(t, "physics"), scen(t, "scenario"), time(t, "time");
    c.name = run.text("name", "experiment");
    const long long seed = run.integer("seed", 1);
    if (seed < 0) throw config_error("config: [run] seed must be non-negative");
    c.seed = std::uint64_t(seed);

    c.nx = int(grid.integer("nx"));
    c.ny = int(grid.integer("ny"));
    c.nz = int(grid.integer("nz"));
    c.Lx = grid.number("Lx", 1.0);
    c.Ly = grid.number("Ly", 1.0);
    c.H = grid.number("H", 1.0);
    if (c.nx < 2 || c.ny < 2 || c.nz < 4) throw config_error("config: [grid] needs nx, ny >= 2 and nz >= 4");
    if (!(c.Lx > 0 && c.Ly > 0 && c.H > 0)) throw config_error("config: [grid] lengths must be positive");

    c.bd.nu = phys.number("nu");
    c.bd.gamma = phys.number("gamma");
    if (!(c.bd.nu > 0)) throw config_error("config: [physics] nu must be positive");
    if (c.bd.gamma < 0) throw config_error("config: [physics] gamma must be non-negative");

    c.scenario = scen.text("name");
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), c.scenario) == names.end()) throw config_error("config: [scenario] name '" + c.scenario + "' is not a registered scenario");
    c.params.amplitude = scen.number("amplitude", 1.0);
    c.params.G = scen.number("G", 1.0);

    c.dt = time.number("dt");
    c.T = time.number("T");
    c.cfl = time.number("cfl", 0.5);
    if (!(c.dt > 0) || !(c.T > 0) || !(c.cfl > 0)) throw config_error("config: [time] dt, T and cfl must be positive");
    if (std::llround(c.T / c.dt) < 1) throw config_error("config: [time] T must cover at least one step");

    for (const auto& pn : detail::split(Reader(t, "probes").text("names", ""), ',')) {
        const Reader p(t, "probe " + pn);
        if (!p.present()) throw config_error("config: [probes] names refers to '" + pn + "' but there is no [probe " + pn + "] section");
        NamedProbe np;
        np.name = pn;
        const auto x0 = p.numbers("x0", 3), e = p.numbers("e", 3, std::vector<double>{1, 0, 0});
        const double ne = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
        if (!(ne > 0)) throw config_error("config: " + p.field("e") + " must be nonzero");
        np.probe.x0 = {x0[0], x0[1], x0[2]};
        np.probe.e = {e[0] / ne, e[1] / ne, e[2] / ne};
        np.probe.cutoff = {p.number("rho1"), p.number("rho2"), int(p.integer("degree", 5))};
        const auto q = p.numbers("quadrature", 3, std::vector<double>{4, 4, 8});
        np.probe.quadrature = {int(q[0]), int(q[1]), int(q[2])};
        np.every = int(p.integer("every", 1));
        if (np.every < 1 || q[0] < 1 || q[1] < 1 || q[2] < 1) throw config_error("config: [probe " + pn + "] quadrature and every must be positive");
        try {
            np.probe.cutoff.validate();
        } catch (const std::exception& ex) {
            throw config_error("config: [probe " + pn + "] " + ex.what());
        }
        c.probes.push_back(np);
    }
    for (const auto& [sec, body] : t) {
        (void)body;
        if (sec.rfind("probe ", 0) != 0) continue;
        const std::string pn = sec.substr(6);
        if (std::none_of(c.probes.begin(), c.probes.end(), [&](const NamedProbe& p) { return p.name == pn; }))
            throw config_error("config: section [" + sec + "] is not listed in [probes] names");
    }

    const Reader ex(t, "exponents");
    std::tie(c.serrin_r, c.serrin_s) = detail::exponent_pair(ex, "serrin", "4, 6");
    std::tie(c.reg_r, c.reg_q) = detail::exponent_pair(ex, "regularity", "8/7, 4/3");

    const Reader led(t, "ledger");
    c.ledger_eps = led.number("eps", c.T / 10);
    c.alpha_max = int(led.integer("alpha_max", 2));
    if (c.ledger_eps < 0 || 2 * c.ledger_eps >= c.T) throw config_error("config: [ledger] eps must lie in [0, T/2)");
    if (c.alpha_max < 0 || c.alpha_max > 2) throw config_error("config: [ledger] alpha_max must be 0, 1 or 2");

    const Reader out(t, "output");
    c.output_dir = out.text("dir", "runs/" + c.name);
    c.vtk_every = int(out.integer("vtk_every", 10));
    if (c.vtk_every < 1) throw config_error("config: [output] vtk_every must be positive");

    const Reader tol(t, "tolerances");
    for (const auto& [key, def] : default_check_tolerances()) {
        (void)def;
        if (!tol.raw(key)) continue;
        const double v = tol.number(key);
        if (!(v > 0)) throw config_error("config: " + tol.field(key) + " must be positive");
        c.checks.overrides[key] = v;
    }
    c.checks.seed = c.seed;

    const std::string sel = Reader(t, "checks").text("run", "all");
    if (sel == "all") {
        for (const auto& s : check_registry()) c.selected.insert(s.id);
    } else if (sel != "none") {
        for (const auto& s : detail::split(sel, ',')) {
            std::size_t pos = 0;
            int id = 0;
            try {
                id = std::stoi(s, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != s.size() || id < 1 || id > int(check_registry().size())) throw config_error("config: [checks] run lists unknown check '" + s + "'");
            c.selected.insert(id);
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw config_error("config: cannot read " + p.string());
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config(text, p.string());
}

/// Output directory after the environment override.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
    if (const char* e = std::getenv("SLIPNS_OUTPUT_DIR"); e && *e) return std::filesystem::path(e);
    return c.output_dir;
}

/// Thread count from the environment; the pipeline is sequential, so this is only validated and recorded.
inline int resolve_threads() {
    const char* e = std::getenv("SLIPNS_THREADS");
    if (!e || !*e) return 1;
    char* end = nullptr;
    const long n = std::strtol(e, &end, 10);
    if (*end != '\0' || n < 1) throw config_error("SLIPNS_THREADS must be a positive integer");
    return int(n);
}

struct StageStatus {
    std::string name, status, detail;  ///< status: ok, failed, skipped
};

struct RunReport {
    nlohmann::ordered_json json;
    std::vector<CheckResult> checks;
    std::vector<StageStatus> stages;
    std::vector<std::string> skipped_checks;
    std::vector<std::string> artifacts;
    bool passed = false;
    std::string text;  ///< human-readable summary
};

/// One row per acceptance check in registry order.
inline std::string list_checks() {
    std::ostringstream o;
    for (const auto& s : check_registry()) {
        char line[256];
        std::snprintf(line, sizeof line, "%2d  %-32s %s\n", s.id, s.name.c_str(), s.tag.c_str());
        o << line;
    }
    return o.str();
}

namespace detail {

struct PipelineState {
    std::optional<WeakSolutionTrajectory> tr;
    std::optional<PressureDecomposition> decomposition;
    std::optional<PressureTrajectory> pressure;
};

// solve and decompose; shared by run and export
inline void solve_and_decompose(const ExperimentConfig& c, const MetricContext& ctx, PipelineState& s) {
    const Scenario sc = make_scenario(c.scenario, c.params, c.bd, c.H);
    s.tr = run_scenario(ctx, sc, c.bd, {c.dt, c.T, c.cfl, c.seed, 1});
    const SlipStokesOperator A(ctx.grid(), c.bd);
    s.decomposition = decompose_trajectory(ctx, A, *s.tr, interior_box(ctx.grid()));
    s.pressure = assemble_pressure(*s.decomposition);
}

inline nlohmann::ordered_json measurement_json(const Measurement& m) {
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["value"] = m.value;
    j["relation"] = m.relation;
    if (m.relation == "in") j["bounds"] = {m.lo, m.hi};
    else if (m.relation != "info") j["bound"] = m.hi;
    j["ok"] = m.ok;
    return j;
}

}  // namespace detail

/**
 * @brief Deterministic pipeline: solve, decompose the pressure, probe, ledgers, then the selected checks.
 *
 * A failed stage is recorded and the stages that depend on it are skipped with the reason.
 * Timings go to timing.txt only, so report.json is reproducible.
 */
inline RunReport run(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    using nlohmann::ordered_json;
    fs::create_directories(out_dir);
    RunReport rep;
    std::ostringstream timing;
    auto clock = [] { return std::chrono::steady_clock::now(); };
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };

    {
        std::ofstream f(out_dir / "config.ini", std::ios::binary);
        f << c.source_text;
    }
    rep.artifacts.push_back("config.ini");

    ordered_json ledgers = ordered_json::object(), probes = ordered_json::array();
    const Grid g = c.grid();
    MetricContext ctx(g);
    detail::PipelineState st;

    auto stage = [&](const std::string& name, const std::string& blocked_by, const std::function<void()>& body) {
        if (!blocked_by.empty()) {
            rep.stages.push_back({name, "skipped", "needs stage '" + blocked_by + "'"});
            return false;
        }
        const auto t0 = clock();
        try {
            body();
            rep.stages.push_back({name, "ok", ""});
        } catch (const std::exception& e) {
            rep.stages.push_back({name, "failed", e.what()});
        }
        timing << name << " " << secs(t0, clock()) << " s\n";
        return rep.stages.back().status == "ok";
    };

    std::string blocked;
    if (!stage("solve", blocked, [&] {
            const Scenario sc = make_scenario(c.scenario, c.params, c.bd, c.H);
            st.tr = run_scenario(ctx, sc, c.bd, {c.dt, c.T, c.cfl, c.seed, 1});
            const EnergyReport e = energy_report(*st.tr);
            io::write_energy_csv(out_dir / "energy.csv", *st.tr, e);
            rep.artifacts.push_back("energy.csv");
            ordered_json j;
            j["steps"] = st.tr->u.size() - 1;
            j["kinetic_initial"] = e.rows.front().kinetic;
            j["kinetic_final"] = e.rows.back().kinetic;
            j["monotone"] = e.monotone;
            j["balance_defect_max"] = e.eps_scheme;
            ledgers["energy"] = j;
        }))
        blocked = "solve";

    if (!stage("pressure", blocked, [&] {
            const SlipStokesOperator A(g, c.bd);
            st.decomposition = decompose_trajectory(ctx, A, *st.tr, interior_box(g));
            st.pressure = assemble_pressure(*st.decomposition);
            io::write_pressure_csv(out_dir / "pressure_ledger.csv", *st.decomposition);
            rep.artifacts.push_back("pressure_ledger.csv");
            const auto L = st.decomposition->ledger();
            ordered_json j;
            j["sup_p1_l2"] = L.sup_p1;
            j["sum_p21_l2_pow2"] = L.sum_p21_sq;
            j["sum_p22_l2_pow4/3"] = L.sum_p22_43;
            j["sum_p23_l2_pow2"] = L.sum_p23_sq;
            j["finite"] = L.finite();
            double mean = 0;
            for (const auto& e : st.decomposition->entries)
                for (double m : e.mean) mean = std::max(mean, std::abs(m));
            j["component_mean_max"] = mean;
            ledgers["pressure"] = j;
        }))
        blocked = blocked.empty() ? "pressure" : blocked;

    const std::string after_pressure = blocked;
    stage("probe", after_pressure, [&] {
        std::ofstream f = io::open_out(out_dir / "probes.txt");
        for (const auto& np : c.probes) {
            np.probe.validate(&g);
            const NeumannSplit sp = neumann_split(ctx.poisson(), g, np.probe);
            std::vector<io::ProbeSample> samples;
            const std::size_t N = st.tr->u.size();
            std::vector<std::size_t> steps;
            for (std::size_t n = 0; n < N; n += std::size_t(np.every)) steps.push_back(n);
            if (steps.back() != N - 1) steps.push_back(N - 1);
            for (const std::size_t m : steps) {
                const VectorField f_m = st.tr->forcing(g, st.tr->times[m]);
                samples.push_back({st.tr->times[m], grad_p_newtonian(st.pressure->field[m], np.probe), p12_eval(st.tr->u[m], sp, c.bd, &f_m)});
            }
            f << io::probe_report(np.name, np.probe, samples) << "\n";
            const auto& l = samples.back();
            ordered_json j;
            j["name"] = np.name;
            j["t"] = l.t;
            j["grad_p_e"] = l.newton.value;
            j["P1"] = l.newton.P1;
            j["P2"] = l.newton.P2;
            j["P3"] = l.newton.P3;
            j["P12"] = l.newton.P12;
            j["P12_direct"] = -l.p12.direct;
            j["P12_rewritten"] = -l.p12.rewritten();
            j["viscous"] = l.p12.viscous;
            probes.push_back(j);
        }
        rep.artifacts.push_back("probes.txt");
    });

    stage("ledger", after_pressure, [&] {
        const CellBox box = interior_box(g);
        const RegularityLedger L = regularity_ledger(*st.tr, *st.pressure, box, c.ledger_eps, c.alpha_max);
        io::write_regularity_csv(out_dir / "regularity.csv", L);
        rep.artifacts.push_back("regularity.csv");
        ordered_json j;
        j["eps"] = c.ledger_eps;
        j["p_l4_by_order"] = L.p_l4;
        j["dtu_l4_by_order"] = L.dtu_l4;
        ledgers["regularity"] = j;

        ordered_json e;
        e["serrin"] = {c.serrin_r.str(), c.serrin_s.str()};
        e["serrin_admissible"] = serrin_check(c.serrin_r, c.serrin_s);
        if (e["serrin_admissible"]) e["serrin_norm"] = serrin_norm(*st.tr, c.serrin_r, c.serrin_s, box, st.tr->times.front(), st.tr->times.back());
        e["regularity"] = {c.reg_r.str(), c.reg_q.str()};
        e["regularity_admissible"] = maximal_regularity_exponents(c.reg_r, c.reg_q);
        ledgers["exponents"] = e;
    });

    // the checks use their own fixed setups, so they do not depend on the pipeline stages
    rep.passed = std::all_of(rep.stages.begin(), rep.stages.end(), [](const StageStatus& s) { return s.status == "ok"; });
    for (const auto& spec : check_registry()) {
        if (!c.selected.count(spec.id)) {
            CheckResult r;
            r.id = spec.id;
            r.name = spec.name;
            r.tag = spec.tag;
            r.detail = "not selected";
            rep.checks.push_back(r);
            rep.skipped_checks.push_back(spec.name);
            continue;
        }
        rep.checks.push_back(run_check(spec, c.checks));
        timing << "check " << spec.id << " " << rep.checks.back().seconds << " s\n";
        if (!rep.checks.back().passed) rep.passed = false;
    }

    ordered_json& j = rep.json;
    j["provenance"] = {{"config_name", c.name}, {"config_hash", c.hash_hex()}, {"code_version", code_version}, {"seed", c.seed}};
    ordered_json stages = ordered_json::array();
    for (const auto& s : rep.stages) stages.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
    j["stages"] = stages;
    ordered_json checks = ordered_json::array(), constants = ordered_json::array();
    for (const auto& r : rep.checks) {
        const bool skipped = !c.selected.count(r.id);
        ordered_json cj;
        cj["id"] = r.id;
        cj["name"] = r.name;
        cj["tag"] = r.tag;
        cj["status"] = skipped ? "skipped" : r.passed ? "pass" : "fail";
        cj["detail"] = r.detail;
        ordered_json ms = ordered_json::array();
        for (const auto& m : r.measurements) ms.push_back(detail::measurement_json(m));
        cj["measurements"] = ms;
        checks.push_back(cj);
        for (const auto& [name, v] : r.constants) constants.push_back({{"check", r.id}, {"name", name}, {"value", v}});
    }
    j["checks"] = checks;
    j["fitted_constants"] = constants;
    j["ledgers"] = ledgers;
    j["probes"] = probes;
    j["passed"] = rep.passed;
    rep.artifacts.push_back("report.json");
    rep.artifacts.push_back("report.txt");
    j["artifacts"] = rep.artifacts;

    std::ostringstream txt;
    txt << "run " << c.name << "  config " << c.hash_hex() << "  " << code_version << "  seed " << c.seed << "\n";
    for (const auto& s : rep.stages) txt << "stage " << s.name << ": " << s.status << (s.detail.empty() ? "" : " (" + s.detail + ")") << "\n";
    for (const auto& r : rep.checks) {
        const bool skipped = !c.selected.count(r.id);
        txt << (skipped ? "SKIP" : r.passed ? "PASS" : "FAIL") << " " << r.id << " " << r.name << "  " << r.tag << "\n";
        if (!r.passed && !skipped) txt << "     " << r.detail << "\n";
    }
    for (const auto& k : constants) txt << "constant " << k["name"].get<std::string>() << " = " << io::num(k["value"].get<double>()) << "\n";
    txt << (rep.passed ? "RESULT pass" : "RESULT fail") << "\n";
    rep.text = txt.str();

    io::open_out(out_dir / "report.json") << j.dump(2) << "\n";
    io::open_out(out_dir / "report.txt") << rep.text;
    io::open_out(out_dir / "timing.txt") << timing.str() << "threads " << resolve_threads() << "\n";
    return rep;
}

/**
 * @brief Re-runs the stored config of a run directory and writes the VTK series into <run-dir>/vtk.
 *
 * The config hash must match the report's provenance stamp. Returns the number of files written.
 */
inline int export_run(const std::filesystem::path& dir) {
    const ExperimentConfig c = load_config(dir / "config.ini");
    std::ifstream rf(dir / "report.json");
    if (!rf) throw config_error("export: no report.json in " + dir.string());
    const auto rj = nlohmann::json::parse(rf);
    if (rj.at("provenance").at("config_hash").get<std::string>() != c.hash_hex())
        throw config_error("export: config.ini does not match the report's config hash");
    const Grid g = c.grid();
    MetricContext ctx(g);
    detail::PipelineState st;
    detail::solve_and_decompose(c, ctx, st);
    int count = 0;
    const std::size_t N = st.tr->u.size();
    for (std::size_t n = 0; n < N; ++n) {
        if (n % std::size_t(c.vtk_every) != 0 && n + 1 != N) continue;
        char name[64];
        std::snprintf(name, sizeof name, "flow_%05zu.vtk", n);
        io::write_vtk(dir / "vtk" / name, st.tr->u[n], &st.pressure->field[n], st.tr->times[n]);
        ++count;
    }
    return count;
}

}  // namespace slipns
