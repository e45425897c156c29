// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "interior.hpp"
#include "pressure.hpp"
#include "rational.hpp"
#include "solver.hpp"

namespace slipns {

/// One measured quantity with the bound it is held to.
struct Measurement {
    std::string name;
    double value = 0;
    std::string relation;  ///< "<", "<=", "==", "in", "info"
    double lo = 0, hi = 0;
    bool ok = true;
};

struct CheckResult {
    int id = 0;
    std::string name, tag;
    bool passed = false;
    std::string detail;  ///< failure reason or the exception text of a stage that threw
    double seconds = 0;
    std::vector<Measurement> measurements;
    std::vector<std::pair<std::string, double>> constants;

    void below(const std::string& n, double v, double tol) { add({n, v, "<", 0, tol, v < tol}); }
    void at_most(const std::string& n, double v, double tol) { add({n, v, "<=", 0, tol, v <= tol}); }
    void equal(const std::string& n, double v, double target) { add({n, v, "==", target, target, v == target}); }
    void within(const std::string& n, double v, double lo, double hi) { add({n, v, "in", lo, hi, v >= lo && v <= hi}); }
    void info(const std::string& n, double v) { add({n, v, "info", 0, 0, true}); }
    void require(const std::string& n, bool b) { add({n, b ? 1.0 : 0.0, "==", 1, 1, b}); }
    void constant(const std::string& n, double v) { constants.emplace_back(n, v); }

private:
    void add(Measurement m) {
        if (!std::isfinite(m.value) && m.relation != "info") m.ok = false;
        measurements.push_back(std::move(m));
    }
};

/// Default bounds of every check, overridable by name.
inline const std::map<std::string, double>& default_check_tolerances() {
    static const std::map<std::string, double> t{
        {"poiseuille_rel", 1e-3},   {"rate_lo", 3.5},          {"rate_hi", 4.5},       {"identity", 1e-9},
        {"gradient_fix", 1e-12},    {"projection", 1e-9},      {"drift", 0.25},        {"harmonic_floor", 1e-10},
        {"mean", 1e-10},            {"newton_rel", 1e-2},      {"newton_floor", 1e-7}, {"linear_rel", 1e-3},
        {"div_w", 1e-8},            {"div_z", 1e-8},           {"yosida", 1e-9},
        {"p12_rate_lo", 3.0},       {"p12_rate_hi", 5.0},
    };
    return t;
}

struct CheckOptions {
    std::uint64_t seed = 1;
    std::map<std::string, double> overrides;

    [[nodiscard]] double tol(const std::string& key) const {
        if (auto it = overrides.find(key); it != overrides.end()) return it->second;
        return default_check_tolerances().at(key);
    }
};

struct CheckSpec {
    int id;
    std::string name, tag;
    std::function<void(CheckResult&, const CheckOptions&)> body;
};

namespace detail {

inline double field_max(const VectorField& v) {
    double m = 0;
    for (const auto* c : {&v.u, &v.v, &v.w})
        for (double x : *c) m = std::max(m, std::abs(x));
    return m;
}

inline double drift(double a, double b) { return std::abs(b - a) / std::max(std::abs(a), 1e-300); }

// Smooth solenoidal tangential field from a vector potential.
inline VectorField cellular_field(const Grid& g) {
    const double kx = 2 * M_PI / g.Lx, kz = M_PI / g.H;
    VectorField v = curl_of_potential(g, [&](double x, double y, double z) {
        const double s = std::sin(kz * z);
        return std::array<double, 3>{0.3 * std::cos(2 * M_PI * y / g.Ly) * s, std::sin(kx * x) * s, 0.2 * std::cos(kx * x)};
    });
    v.zero_walls();
    return v;
}

inline WeakSolutionTrajectory single_state(const Grid& g, const BoundaryData& bd, const VectorField& u,
                                           std::function<VectorField(const Grid&, double)> f = nullptr) {
    WeakSolutionTrajectory tr;
    tr.grid = g;
    tr.bd = bd;
    tr.times = {0.0};
    tr.u = {u};
    tr.forcing = f ? std::move(f) : [](const Grid& gg, double) { return VectorField(gg); };
    return tr;
}

inline std::vector<VectorField> solenoidal_samples(const PoissonSolver& ps, const Grid& g, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<VectorField> s;
    for (int i = 0; i < n; ++i) s.push_back(random_solenoidal_field(ps, g, rng));
    return s;
}

inline VectorField random_tangential(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    VectorField v(g);
    for (auto* c : {&v.u, &v.v, &v.w})
        for (auto& x : *c) x = U(rng);
    v.zero_walls();
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void check_poiseuille(CheckResult& r, const CheckOptions& o) {
    const BoundaryData bd{1.0, 1.0};
    auto level = [&](int nz) {
        const Grid g = build_grid(4, 4, nz, 1, 1, 1);
        const Scenario s = make_scenario("poiseuille_slip", {}, bd, g.H);
        const SlipStokesOperator A(g, bd);
        const VectorField u = steady_stokes(A, s.forcing(g, 0));
        VectorField ref = VectorField::sample(g, [&](double x, double y, double z) { return s.reference(x, y, z, 0); });
        ref.zero_walls();
        return std::make_pair(norm(u - ref, 2.0) / norm(ref, 2.0), u);
    };
    const auto [e32, u32] = level(32);
    const auto [e64, u64] = level(64);
    r.below("rel_l2_error_nz64", e64, o.tol("poiseuille_rel"));
    r.info("rel_l2_error_nz32", e32);
    r.within("error_ratio_32_64", e32 / e64, o.tol("rate_lo"), o.tol("rate_hi"));
    // the discrete steady state is a fixed point of the time stepper
    const Grid g = u64.grid;
    MetricContext ctx(g);
    const Stepper st(ctx, bd, 0.01);
    const VectorField f = make_scenario("poiseuille_slip", {}, bd, g.H).forcing(g, 0);
    r.below("stepper_fixed_point", detail::field_max(st.step(u64, f) - u64), 1e-8);
}

inline void check_projections(CheckResult& r, const CheckOptions& o) {
    const Grid g = build_grid(8, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    std::mt19937_64 rng(o.seed * 1000 + 2);
    double ident = 0, fix = 0, idem = 0, orth = 0, dual_idem = 0, dual_sym = 0;
    for (int s = 0; s < 20; ++s) {
        const VectorField psi = detail::random_tangential(g, rng);
        const Functional G = embed(psi), H = embed(detail::random_tangential(g, rng));
        const Functional EG = project_E_neg12(ctx, G);
        const Vec lhs = ctx.dofs().pack(project_E12(ctx, ctx.dofs().unpack(ctx.solve_M(G.cov))));
        const Vec rhs = ctx.solve_M(EG.cov);
        ident = std::max(ident, (lhs - rhs).norm() / lhs.norm());

        // interior-supported potential: random smooth scalar times a wall-flat bump
        ScalarField phi = random_smooth_scalar(g, rng);
        for (int k = 0; k < g.nz; ++k) {
            const double b = std::pow(std::sin(M_PI * g.zc(k) / g.H), 3);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) phi(i, j, k) *= b;
        }
        const VectorField gp = gradient(phi);
        fix = std::max(fix, detail::field_max(project_E12(ctx, gp) - gp) / detail::field_max(gp));

        const VectorField e = project_E12(ctx, psi);
        idem = std::max(idem, detail::field_max(project_E12(ctx, e) - e) / detail::field_max(e));
        const Vec a = ctx.dofs().pack(e), b = ctx.dofs().pack(psi - e);
        orth = std::max(orth, std::abs(a.dot(ctx.M() * b)) / std::pow(ctx.metric_norm(psi), 2));

        const Functional EEG = project_E_neg12(ctx, EG);
        dual_idem = std::max(dual_idem, (EEG.cov - EG.cov).norm() / EG.cov.norm());
        const double gh = neg_inner(ctx, EG, H), hg = neg_inner(ctx, G, project_E_neg12(ctx, H));
        dual_sym = std::max(dual_sym, std::abs(gh - hg) / (neg_norm(ctx, G) * neg_norm(ctx, H)));
    }
    r.below("dual_identity_residual", ident, o.tol("identity"));
    r.below("gradient_fixed_residual", fix, o.tol("gradient_fix"));
    r.below("E12_idempotence", idem, o.tol("projection"));
    r.below("E12_orthogonality", orth, o.tol("projection"));
    r.below("Eneg12_idempotence", dual_idem, o.tol("projection"));
    r.below("Eneg12_selfadjoint", dual_sym, o.tol("projection"));
}

inline void check_pressure_construction(CheckResult& r, const CheckOptions& o) {
    const BoundaryData bd{0.1, 1.0};
    const double T = 0.005;
    // annihilator defect of F(T) with dt proportional to h^2
    auto defect = [&](int n, int steps) {
        const Grid g = build_grid(n, 4, n, 1, 1, 1);
        MetricContext ctx(g);
        const auto tr = run_scenario(ctx, make_scenario("taylor_green", {}, bd, g.H), bd, {T / steps, T});
        const SlipStokesOperator A(g, bd);
        const Functional F = assemble_F(A, tr, tr.u.size() - 1);
        const double d = annihilator_pairing(ctx, F, detail::solenoidal_samples(ctx.poisson(), g, 10, o.seed * 1000 + 3));
        const double h = 1.0 / n;
        return d / (h * h + T / steps);
    };
    const double c1 = defect(32, 10), c2 = defect(64, 40);
    r.info("defect_constant_32", c1);
    r.info("defect_constant_64", c2);
    // the constant shrinks under refinement (the splitting error converges faster than h^2 + dt),
    // so stability is the fine level staying under the coarse constant
    r.info("defect_constant_drift", detail::drift(c1, c2));
    r.below("defect_constant_growth", c2 / c1 - 1, o.tol("drift"));
    r.constant("annihilator_defect_C", std::max(c1, c2));

    // interior harmonicity and component means on a smooth solenoidal state
    double mean = 0;
    auto harmonic = [&](int n) {
        const Grid g = build_grid(n, 4, n, 1, 1, 1);
        MetricContext ctx(g);
        const SlipStokesOperator A(g, {1.0, 1.0});
        const CellBox omega0{n / 4, 3 * n / 4, 0, 4, n / 4, 3 * n / 4};
        const auto e = decompose_pressure(ctx, A, detail::single_state(g, {1.0, 1.0}, detail::cellular_field(g)), 0, omega0);
        for (double m : e.mean) mean = std::max(mean, std::abs(m));
        const CellBox box = interior_box(g);
        return std::array<double, 2>{harmonicity_defect(e.p[P1], box), harmonicity_defect(e.p[P21], box)};
    };
    const auto a = harmonic(32), b = harmonic(64);
    // p1 of a solenoidal field vanishes in the flat channel, so its ratio is undefined; it is held to a floor
    r.below("p1_harmonicity_max", std::max(a[0], b[0]), o.tol("harmonic_floor"));
    r.within("p21_harmonicity_ratio", a[1] / b[1], o.tol("rate_lo"), o.tol("rate_hi"));
    r.below("component_mean_max", mean, o.tol("mean"));

    // time-integrability ledger along a short flow
    const Grid g = build_grid(16, 4, 16, 1, 1, 1);
    MetricContext ctx(g);
    const auto tr = run_scenario(ctx, make_scenario("taylor_green", {}, bd, g.H), bd, {0.01, 0.05});
    const auto L = decompose_trajectory(ctx, SlipStokesOperator(g, bd), tr, interior_box(g)).ledger();
    r.require("ledger_finite", L.finite());
    r.info("sup_p1_l2", L.sup_p1);
    r.info("sum_p21_l2_pow2", L.sum_p21_sq);
    r.info("sum_p22_l2_pow4/3", L.sum_p22_43);
    r.info("sum_p23_l2_pow2", L.sum_p23_sq);
}

inline void check_gauge(CheckResult& r, const CheckOptions&) {
    const Grid g = build_grid(6, 4, 6, 1, 1, 1);
    MetricContext ctx(g);
    const BoundaryData bd{0.1, 1};
    const SlipStokesOperator A(g, bd);
    const auto tr = run_scenario(ctx, make_scenario("taylor_green", {}, bd, g.H), bd, {0.02, 0.1});
    const CellBox omega0 = CellBox::whole(g);
    const auto p = assemble_pressure(decompose_trajectory(ctx, A, tr, omega0));
    auto signal = [](double t) { return std::sin(t) + 0.5 * t * t; };
    const auto q = gauge_shift(p, signal);
    const auto m0 = mean_ledger(p, omega0), m1 = mean_ledger(q, omega0);
    double grad = 0, mean = 0, mom = 0;
    for (std::size_t n = 0; n < p.times.size(); ++n) {
        mean = std::max(mean, std::abs((m1[n] - m0[n]) - signal(p.times[n])));
        const VectorField a = pressure_gradient(p, n), b = pressure_gradient(q, n);
        if (a.u != b.u || a.v != b.v || a.w != b.w) grad = std::max(grad, detail::field_max(a - b) + 1e-300);
        if (n > 0) mom = std::max(mom, std::abs(momentum_residual(A, tr, p, n, interior_box(g)) - momentum_residual(A, tr, q, n, interior_box(g))));
    }
    r.equal("gradient_difference", grad, 0.0);
    r.equal("momentum_residual_difference", mom, 0.0);
    r.equal("mean_shift_minus_signal", mean, 0.0);
}

inline void check_newtonian(CheckResult& r, const CheckOptions& o) {
    std::mt19937_64 rng(o.seed * 1000 + 5);
    std::uniform_real_distribution<double> U(-1, 1);
    double worst = 0, worst_fine = 0;
    int non_monotone = 0;
    auto random_probe = [&] {
        ProbePoint pr;
        pr.cutoff = {0.15, 0.3, 5};
        pr.x0 = {0.5 + 0.5 * std::abs(U(rng)), 0.4 + 0.2 * U(rng), 0.5 + 0.1 * U(rng)};
        const double th = M_PI * std::abs(U(rng)), ph = M_PI * U(rng);
        pr.e = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        return pr;
    };
    for (int s = 0; s < 10; ++s) {
        const double k1 = 2 + 2 * std::abs(U(rng)), k2 = 2 + 2 * std::abs(U(rng)), k3 = 1 + std::abs(U(rng)), c0 = U(rng), c1 = U(rng);
        auto p = [=](const Point& x) { return std::sin(k1 * x[0] + c0) * std::cos(k2 * x[2]) + c1 * std::cos(k3 * x[1]) * x[2] * x[2]; };
        const ProbePoint pr = random_probe();
        const Point& x = pr.x0;
        const double exact = pr.e[0] * k1 * std::cos(k1 * x[0] + c0) * std::cos(k2 * x[2]) - pr.e[1] * c1 * k3 * std::sin(k3 * x[1]) * x[2] * x[2] +
                             pr.e[2] * (-k2 * std::sin(k1 * x[0] + c0) * std::sin(k2 * x[2]) + 2 * c1 * std::cos(k3 * x[1]) * x[2]);
        double prev = 1e300;
        for (int f : {1, 2, 3, 4}) {
            ProbePoint q = pr;
            q.quadrature = q.quadrature.refined(f);
            const double err = std::abs(grad_p_newtonian(p, q).value - exact) / std::max(1.0, std::abs(exact));
            if (f == 1) worst = std::max(worst, err);
            if (f == 4) worst_fine = std::max(worst_fine, err);
            if (!(err < prev || err < o.tol("newton_floor"))) ++non_monotone;
            prev = err;
        }
    }
    r.below("max_rel_error_default_quadrature", worst, o.tol("newton_rel"));
    r.info("max_rel_error_refined_x4", worst_fine);
    r.equal("non_monotone_refinements", non_monotone, 0);

    double lin = 0;
    for (int s = 0; s < 3; ++s) {
        const Point a{U(rng), U(rng), U(rng)};
        const ProbePoint pr = random_probe();
        const double exact = a[0] * pr.e[0] + a[1] * pr.e[1] + a[2] * pr.e[2];
        const auto res = grad_p_newtonian([&](const Point& x) { return 0.3 + a[0] * x[0] + a[1] * x[1] + a[2] * x[2]; }, pr);
        lin = std::max(lin, std::abs(res.value - exact) / std::abs(exact));
    }
    r.below("linear_rel_error", lin, o.tol("linear_rel"));
}

inline void check_splits(CheckResult& r, const CheckOptions& o) {
    const BallSplit b = ball_split({0.1, 0.2, 5}, {0.0, 0.6, 0.8});
    std::mt19937_64 rng(o.seed * 1000 + 6);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0, 1);
    double div = 0;
    for (int s = 0; s < 200; ++s) {
        const Point d{N(rng), N(rng), N(rng)};
        const double nd = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), rad = 0.2 * std::cbrt(U(rng));
        div = std::max(div, std::abs(b.div_w({rad * d[0] / nd, rad * d[1] / nd, rad * d[2] / nd})));
    }
    r.below("ball_div_w_max", div, o.tol("div_w"));

    const Grid g = build_grid(32, 32, 32, 1, 1, 1);
    PoissonSolver ps(g);
    ProbePoint pr;
    pr.x0 = {0.5, 0.5, 0.5};
    pr.e = {0.6, 0, 0.8};
    pr.cutoff = {0.15, 0.3, 5};
    const NeumannSplit sp = neumann_split(ps, g, pr);
    r.below("neumann_div_z_residual", sp.div_residual, o.tol("div_z"));
    double wall = 0;
    const std::size_t layer = std::size_t(g.nx) * g.ny;
    for (std::size_t n = 0; n < layer; ++n) wall = std::max({wall, std::abs(sp.z.w[n]), std::abs(sp.z.w[layer * g.nz + n])});
    r.equal("z_wall_normal_max", wall, 0.0);
}

inline void check_boundary_chain(CheckResult& r, const CheckOptions& o) {
    // direct and rewritten P12 on a steady Euler cell, two meshes
    auto diff = [](int n) {
        const Grid g = build_grid(2 * n, n, n, 2, 1, 1);
        PoissonSolver ps(g);
        ProbePoint pr;
        pr.x0 = {0.8, 0.5, 0.45};
        pr.e = {0.6, 0, 0.8};
        pr.cutoff = {0.15, 0.3, 5};
        const auto sp = neumann_split(ps, g, pr);
        VectorField u = VectorField::sample(g, [](double x, double, double z) {
            return std::array<double, 3>{std::sin(M_PI * x) * std::cos(M_PI * z), 0, -std::cos(M_PI * x) * std::sin(M_PI * z)};
        });
        u.zero_walls();
        const auto e = p12_eval(u, sp, {0.1, 0.0});
        return std::abs(e.direct - e.rewritten());
    };
    const double d1 = diff(16), d2 = diff(32);
    r.info("direct_minus_rewritten_16", d1);
    r.info("direct_minus_rewritten_32", d2);
    r.within("direct_rewritten_ratio", d1 / d2, o.tol("p12_rate_lo"), o.tol("p12_rate_hi"));

    // viscous part along a 200-step flow against c1 + c2 ||u||_{1,2}^{1/2}
    const Grid g = build_grid(16, 12, 16, 1, 0.75, 1);
    const BoundaryData bd{0.1, 1.0};
    MetricContext ctx(g);
    const auto tr = run_scenario(ctx, make_scenario("random", {}, bd, g.H), bd, {0.005, 1.0, 0.5, o.seed});
    ProbePoint pr;
    pr.x0 = {0.5, 0.375, 0.5};
    pr.cutoff = {0.15, 0.3, 5};
    const auto sp = neumann_split(ctx.poisson(), g, pr);
    std::vector<double> V, S;
    for (std::size_t n = 1; n < tr.u.size(); ++n) {
        V.push_back(std::abs(p12_eval(tr.u[n], sp, bd).viscous));
        S.push_back(std::sqrt(norm(tr.u[n], 2.0, Space::W1q)));
    }
    // least squares on the first half, then c1 lifted to cover that half
    const std::size_t m = V.size() / 2;
    double sv = 0, ss = 0, svs = 0, sss = 0;
    for (std::size_t n = 0; n < m; ++n) {
        sv += V[n];
        ss += S[n];
        svs += V[n] * S[n];
        sss += S[n] * S[n];
    }
    const double den = double(m) * sss - ss * ss;
    const double c2 = std::max(0.0, den > 0 ? (double(m) * svs - ss * sv) / den : 0.0);
    double c1 = 0;
    for (std::size_t n = 0; n < m; ++n) c1 = std::max(c1, V[n] - c2 * S[n]);
    int violations = 0;
    double l4 = 0;
    for (std::size_t n = 0; n < V.size(); ++n) {
        if (V[n] > c1 + c2 * S[n]) ++violations;
        l4 += tr.dt * std::pow(c1 + c2 * S[n], 4);
    }
    r.info("steps", double(V.size()));
    r.equal("bound_violations", violations, 0);
    r.require("bound_l4_finite", std::isfinite(l4));
    r.info("bound_l4_norm", std::pow(l4, 0.25));
    r.constant("viscous_c1", c1);
    r.constant("viscous_c2", c2);
}

inline void check_yosida(CheckResult& r, const CheckOptions& o) {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    const BoundaryData bd{0.2, 1.0};
    const SlipStokesOperator A(g, bd);
    const auto sm = detail::solenoidal_samples(ctx.poisson(), g, 2, o.seed * 1000 + 8);
    const VectorField &u = sm[0], &v = sm[1];
    const Yosida J1(ctx, A, 1), J10(ctx, A, 10);
    const double a = dot(J10.apply(u), v), b = dot(u, J10.apply(v));
    r.below("selfadjoint_residual", std::abs(a - b) / std::max(std::abs(a), norm(u, 2.0) * norm(v, 2.0)), o.tol("yosida"));
    r.below("commutation_residual", detail::field_max(J1.apply(J10.apply(u)) - J10.apply(J1.apply(u))) / detail::field_max(u), o.tol("yosida"));
    double prev = 1e300;
    int increases = 0;
    for (double k : {1.0, 10.0, 100.0, 1000.0}) {
        const double e = norm(yosida(ctx, A, u, k) - u, 2.0);
        r.info("approx_error_k" + std::to_string(int(k)), e);
        if (!(e < prev)) ++increases;
        prev = e;
    }
    r.equal("non_decreasing_steps", increases, 0);

    // weak form of the flow tested against Yosida-smoothed solenoidal fields
    const double T = 0.4;
    std::vector<SpaceTimeTest> tests;
    for (const auto& s : detail::solenoidal_samples(ctx.poisson(), g, 3, o.seed * 1000 + 9))
        tests.push_back({J10.apply(s), [T](double t) { return (1 - t / T) * (1 - t / T); }, [T](double t) { return -2 * (1 - t / T) / T; }});
    const Scenario sc = make_scenario("taylor_green", {}, bd, g.H);
    auto worst = [&](double dt) {
        const auto tr = run_scenario(ctx, sc, bd, {dt, T});
        double w = 0;
        for (const auto& t : tests) w = std::max(w, weak_residual(ctx, tr, t).relative());
        return w;
    };
    const double w1 = worst(0.02), w2 = worst(0.01);
    r.info("identification_residual_dt", w1);
    r.info("identification_residual_dt/2", w2);
    r.require("identification_decreases", w2 < w1);
}

inline void check_energy(CheckResult& r, const CheckOptions& o) {
    const Grid g = build_grid(8, 8, 8, 1, 1, 1);
    MetricContext ctx(g);
    std::vector<double> e1, e0;
    int increases = 0;
    double eps = 0;
    for (double gamma : {1.0, 0.0}) {
        const BoundaryData bd{0.05, gamma};
        const auto tr = run_scenario(ctx, make_scenario("random", {2.0, 1.0}, bd, g.H), bd, {0.01, 0.3, 0.5, o.seed});
        const EnergyReport rep = energy_report(tr);
        eps = std::max(eps, rep.eps_scheme);
        for (std::size_t n = 0; n < rep.rows.size(); ++n) {
            (gamma == 1.0 ? e1 : e0).push_back(rep.rows[n].kinetic);
            if (n > 0 && rep.rows[n].kinetic > rep.rows[n - 1].kinetic) ++increases;
        }
    }
    int above = 0;
    for (std::size_t n = 0; n < e1.size(); ++n)
        if (e1[n] > e0[n]) ++above;
    r.equal("energy_increases", increases, 0);
    r.info("balance_defect_max", eps);
    r.equal("slip_energy_above_noslip_friction", above, 0);
    r.info("kinetic_final_gamma1", e1.back());
    r.info("kinetic_final_gamma0", e0.back());
}

inline void check_estimates(CheckResult& r, const CheckOptions& o) {
    struct Level { double korn, a, b, rec, p21, p22, p23, mr; };
    auto level = [&](int n) {
        const Grid g = build_grid(n, n, n, 1, 1, 1);
        const BoundaryData bd{1.0, 1.0};
        const SlipStokesOperator A(g, bd);
        MetricContext ctx(g);
        Level L{1e300, 0, 0, 0, 0, 0, 0, 0};
        std::mt19937_64 rng(o.seed * 1000 + 10);
        for (int s = 0; s < 50; ++s) {
            const VectorField v = random_smooth_field(g, rng);
            L.korn = std::min(L.korn, korn_ratio(A, v));
            L.a = std::max(L.a, a_bound_ratio(ctx, A, v));
            const VectorField u = random_solenoidal_field(ctx.poisson(), g, rng);
            L.b = std::max(L.b, b_bound_ratio(ctx, u, v));
        }
        for (int s = 0; s < 5; ++s) {
            const Functional F = embed(gradient(random_smooth_scalar(g, rng)));
            const PressureRecovery pr = pressure_from_functional(ctx, F, CellBox::whole(g));
            L.rec = std::max(L.rec, norm(pr.p, 2.0) / neg_norm(ctx, F));
        }
        auto forcing = [](const Grid& gg, double) {
            VectorField f = VectorField::sample(gg, [](double x, double, double z) { return std::array<double, 3>{std::cos(2 * M_PI * x), 0.5, std::sin(M_PI * z)}; });
            f.zero_walls();
            return f;
        };
        const auto e = decompose_pressure(ctx, A, detail::single_state(g, bd, detail::cellular_field(g), forcing), 0, CellBox::whole(g));
        L.p21 = e.constant[P21];
        L.p22 = e.constant[P22];
        L.p23 = e.constant[P23];

        const Grid g2 = build_grid(n, 4, n, 1, 1, 1);
        MetricContext ctx2(g2);
        const SlipStokesOperator A2(g2, bd);
        auto force = [&](double t) {
            VectorField f = VectorField::sample(g2, [&](double x, double, double z) {
                return std::array<double, 3>{std::cos(2 * M_PI * x) * std::cos(M_PI * z) * (1 + t), 0.0, std::sin(2 * M_PI * x) * std::sin(M_PI * z)};
            });
            f.zero_walls();
            return f;
        };
        L.mr = unsteady_stokes(ctx2, A2, force, VectorField(g2), 0.01, 0.2).estimate_ratio(2.0, 0.0);
        return L;
    };
    const Level a = level(8), b = level(16);
    const std::pair<const char*, double Level::*> rows[] = {
        {"korn_lower", &Level::korn},       {"A_bound", &Level::a},           {"B_bound", &Level::b},
        {"pressure_recovery", &Level::rec}, {"p21_bound", &Level::p21},       {"p22_bound", &Level::p22},
        {"p23_bound", &Level::p23},         {"max_regularity_ratio", &Level::mr},
    };
    for (const auto& [name, m] : rows) {
        r.info(std::string(name) + "_n8", a.*m);
        r.info(std::string(name) + "_n16", b.*m);
        r.below(std::string(name) + "_drift", detail::drift(a.*m, b.*m), o.tol("drift"));
        r.constant(name, b.*m);
    }

    // exponent truth tables, expected values derived by hand from the defining relations
    struct Row { const char *r, *q; bool expect; };
    const Row mr[] = {{"8/7", "4/3", true},  {"2", "3/2", false}, {"1", "1", false},     {"8/7", "5/4", false},
                      {"inf", "4/3", false}, {"4/3", "6/5", true}, {"5/4", "5/4", true}, {"3/2", "9/7", false}};
    const Row se[] = {{"4", "6", true},   {"2", "inf", true}, {"2", "3", false}, {"inf", "3", false},
                      {"3", "6", false},  {"8", "4", true},   {"6", "9/2", true}, {"5/2", "15", true}};
    int wrong = 0;
    for (const auto& x : mr)
        if (maximal_regularity_exponents(Rational::parse(x.r), Rational::parse(x.q)) != x.expect) ++wrong;
    for (const auto& x : se)
        if (serrin_check(Rational::parse(x.r), Rational::parse(x.q)) != x.expect) ++wrong;
    r.equal("exponent_table_mismatches", wrong, 0);
}

/// The acceptance checks in their fixed order; tags are the anchors each row verifies.
inline const std::vector<CheckSpec>& check_registry() {
    static const std::vector<CheckSpec> reg{
        {1, "slip_poiseuille_steady_state", "Robin channel profile", check_poiseuille},
        {2, "projection_identities", "(4.3) (4.4) (4.1)", check_projections},
        {3, "pressure_construction", "Thm 4.2 (4.10)", check_pressure_construction},
        {4, "gauge_freedom", "Thm 4.1", check_gauge},
        {5, "newtonian_representation", "(6.3)", check_newtonian},
        {6, "ball_and_neumann_splits", "(6.6) (6.14)", check_splits},
        {7, "boundary_evaluation_chain", "(6.15)-(6.17)", check_boundary_chain},
        {8, "yosida_suite", "sec 5.3", check_yosida},
        {9, "energy_inequality", "energy inequality", check_energy},
        {10, "estimate_probes", "(3.2) (3.3) (3.4) (2.9*) (4.9) (5.2)", check_estimates},
    };
    return reg;
}

/// Runs one check; exceptions become a failed result carrying the message.
inline CheckResult run_check(const CheckSpec& spec, const CheckOptions& opt) {
    CheckResult r;
    r.id = spec.id;
    r.name = spec.name;
    r.tag = spec.tag;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        spec.body(r, opt);
        r.passed = !r.measurements.empty() && std::all_of(r.measurements.begin(), r.measurements.end(), [](const Measurement& m) { return m.ok; });
        if (!r.passed)
            for (const auto& m : r.measurements)
                if (!m.ok) r.detail += (r.detail.empty() ? "" : "; ") + m.name + " out of bounds";
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("stage failed: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace slipns
