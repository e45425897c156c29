#include <doctest.h>

#include <cmath>
#include <random>

#include "slipns/random_fields.hpp"
#include "slipns/spaces.hpp"

using namespace slipns;

namespace {

VectorField random_tangential(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    VectorField v(g);
    for (auto& x : v.u) x = U(rng);
    for (auto& x : v.v) x = U(rng);
    for (auto& x : v.w) x = U(rng);
    v.zero_walls();
    return v;
}

double max_abs(const std::vector<double>& a) {
    double m = 0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

double field_max(const VectorField& v) { return std::max({max_abs(v.u), max_abs(v.v), max_abs(v.w)}); }

// Vanishes with its normal derivative at both walls.
ScalarField interior_bump(const Grid& g) {
    return ScalarField::sample(g, [&](double x, double y, double z) {
        const double s = std::sin(M_PI * z / g.H);
        return std::cos(2 * M_PI * x / g.Lx) * std::sin(2 * M_PI * y / g.Ly) * s * s * s;
    });
}

}  // namespace

TEST_CASE("embedding pairs as the L2 integral") {
    const Grid g = build_grid(6, 5, 4, 1.0, 1.2, 0.8);
    const VectorField a = random_tangential(g, 1), b = random_tangential(g, 2);
    CHECK(pairing(embed(a), b) == doctest::Approx(dot(a, b)).epsilon(1e-12));
    CHECK(pairing(embed(VectorField(g)), b) == 0.0);
    MetricContext ctx(g);
    CHECK(neg_norm(ctx, Functional(g)) == 0.0);
}

TEST_CASE("metric is positive and neg_norm unwinds on (A0+I)v") {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    const VectorField v = random_tangential(g, 4);
    const Vec x = ctx.dofs().pack(v);
    CHECK(x.dot(ctx.M() * x) > 0);
    const Functional F(g, ctx.M() * x);
    CHECK(neg_norm(ctx, F) == doctest::Approx(ctx.metric_norm(v)).epsilon(1e-10));
}

TEST_CASE("neg_norm is the dual norm over sampled unit balls") {
    const Grid g = build_grid(5, 5, 5, 1, 1, 1);
    MetricContext ctx(g);
    const Functional F = embed(random_tangential(g, 8));
    const double nn = neg_norm(ctx, F);
    double best = 0;
    for (unsigned s = 0; s < 40; ++s) {
        const VectorField phi = random_tangential(g, 100 + s);
        best = std::max(best, std::abs(pairing(F, phi)) / ctx.metric_norm(phi));
    }
    CHECK(best <= nn * (1 + 1e-12));
    // The maximiser is (A0+I)^{-1} F.
    const VectorField opt = ctx.dofs().unpack(ctx.solve_M(F.cov));
    CHECK(pairing(F, opt) / ctx.metric_norm(opt) == doctest::Approx(nn).epsilon(1e-10));
}

TEST_CASE("neg_norm of embedded fields is bounded by the L2 norm") {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    double c = 0;
    for (unsigned s = 0; s < 20; ++s) {
        const VectorField f = random_tangential(g, 200 + s);
        c = std::max(c, neg_norm(ctx, embed(f)) / norm(f, 2.0));
    }
    // (A0+I) >= I gives c <= 1.
    CHECK(c <= 1.0 + 1e-12);
    CHECK(c > 0);
}

TEST_CASE("Helmholtz projection: idempotent, orthogonal, fixes solenoidal fields") {
    const Grid g = build_grid(8, 6, 7, 1.0, 0.9, 1.1);
    PoissonSolver ps(g);
    for (unsigned s = 0; s < 50; ++s) {
        const VectorField f = random_tangential(g, 300 + s);
        const HelmholtzResult h = helmholtz_project(ps, f);
        CHECK(norm(divergence(h.sigma), q_infinity) < 1e-10);
        CHECK(h.sigma.is_tangential());
        CHECK(std::abs(dot(h.sigma, h.grad_psi)) < 1e-9 * std::max(1.0, l2_squared(f)));
        CHECK(field_max(h.sigma + h.grad_psi - f) < 1e-12);
        const HelmholtzResult h2 = helmholtz_project(ps, h.sigma);
        CHECK(field_max(h2.sigma - h.sigma) < 1e-10);
        CHECK(field_max(h2.grad_psi) < 1e-10);
    }
}

TEST_CASE("Helmholtz projection removes gradients and keeps wall normal data in grad_psi") {
    const Grid g = build_grid(8, 8, 8, 1, 1, 1);
    PoissonSolver ps(g);
    const VectorField gp = gradient(interior_bump(g));
    CHECK(field_max(helmholtz_project(ps, gp).sigma) < 1e-10);

    VectorField f = random_tangential(g, 12);
    f.w[0] = 0.7;  // normal wall value at the bottom
    const HelmholtzResult h = helmholtz_project(ps, f);
    CHECK(h.grad_psi.w[0] == 0.7);
    CHECK(h.sigma.w[0] == 0.0);
}

TEST_CASE("embedded interior gradients annihilate solenoidal fields") {
    const Grid g = build_grid(8, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    std::mt19937_64 rng(5);
    std::vector<VectorField> samples;
    for (int s = 0; s < 10; ++s) samples.push_back(random_solenoidal_field(ctx.poisson(), g, rng));
    const Functional F = embed(gradient(interior_bump(g)));
    CHECK(annihilator_defect(ctx, F, samples) < 1e-9);
    const Functional G = embed(samples[0]);
    CHECK(annihilator_defect(ctx, G, samples) > 1e-3);
}

TEST_CASE("E12 fixes gradients and kills solenoidal fields") {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    const VectorField gp = gradient(interior_bump(g));
    CHECK(field_max(project_E12(ctx, gp) - gp) < 1e-9 * field_max(gp));
    std::mt19937_64 rng(7);
    const VectorField s = random_solenoidal_field(ctx.poisson(), g, rng);
    CHECK(field_max(project_E12(ctx, s)) < 1e-9 * field_max(s));
    CHECK_THROWS_AS(project_E12(ctx, [&] { VectorField v(g); v.w[0] = 1; return v; }()), precondition_error);
}

TEST_CASE("E12 is an orthogonal projection in the metric") {
    const Grid g = build_grid(6, 5, 6, 1, 1, 1);
    MetricContext ctx(g);
    for (unsigned s = 0; s < 5; ++s) {
        const VectorField psi = random_tangential(g, 400 + s);
        const VectorField e = project_E12(ctx, psi);
        const VectorField ee = project_E12(ctx, e);
        CHECK(field_max(ee - e) < 1e-9 * field_max(e));
        const Vec a = ctx.dofs().pack(e), b = ctx.dofs().pack(psi - e);
        CHECK(std::abs(a.dot(ctx.M() * b)) < 1e-9 * ctx.metric_norm(psi) * ctx.metric_norm(psi));
        CHECK(norm(divergence(psi - e), q_infinity) < 1e-9 * field_max(psi) / g.hmin());
    }
}

TEST_CASE("dual projection: identity with E12, annihilator range, self-adjoint") {
    const Grid g = build_grid(6, 6, 5, 1, 1, 1);
    MetricContext ctx(g);
    std::mt19937_64 rng(9);
    std::vector<VectorField> samples;
    for (int s = 0; s < 8; ++s) samples.push_back(random_solenoidal_field(ctx.poisson(), g, rng));
    for (unsigned s = 0; s < 4; ++s) {
        const Functional G = embed(random_tangential(g, 500 + s));
        const Functional H = embed(random_tangential(g, 600 + s));
        const Functional EG = project_E_neg12(ctx, G);
        CHECK(EG.annihilator);
        // E12 (A0+I)^{-1} g = (A0+I)^{-1} E^{-1,2} g
        const Vec lhs = ctx.dofs().pack(project_E12(ctx, ctx.dofs().unpack(ctx.solve_M(G.cov))));
        const Vec rhs = ctx.solve_M(EG.cov);
        CHECK((lhs - rhs).norm() < 1e-9 * lhs.norm());
        CHECK(annihilator_defect(ctx, EG, samples) < 1e-9);
        const Functional EH = project_E_neg12(ctx, H);
        CHECK(neg_inner(ctx, EG, H) == doctest::Approx(neg_inner(ctx, G, EH)).epsilon(1e-9));
    }
}

TEST_CASE("Bogovskii right inverse on an interior box") {
    const Grid g = build_grid(8, 4, 8, 1, 1, 1);
    MetricContext ctx(g);
    const CellBox box{2, 6, 0, 4, 2, 6};
    const ScalarField s = ScalarField::sample(g, [](double x, double, double z) {
        const double b = std::sin(M_PI * (z - 0.25) / 0.5);
        return std::sin(2 * M_PI * (x - 0.25) / 0.5) * b * b;
    });
    const BogovskiiResult r = bogovskii(ctx, s, box);
    CHECK(r.div_residual < 1e-8);
    CHECK(r.constant > 0);
    const ScalarField d = divergence(r.psi);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (!box.contains(i, j, k)) CHECK(std::abs(d(i, j, k)) < 1e-14);
    // faces on the box boundary carry no flux
    for (int k = box.k0; k < box.k1; ++k)
        for (int j = 0; j < g.ny; ++j) {
            CHECK(r.psi.u[g.c(box.i0, j, k)] == 0.0);
            CHECK(r.psi.u[g.c(box.i1, j, k)] == 0.0);
        }

    CHECK(field_max(bogovskii(ctx, ScalarField(g), box).psi) == 0.0);
    CHECK_THROWS_WITH_AS(bogovskii(ctx, ScalarField(g, 0.1), box), doctest::Contains("mean-value not zero"), precondition_error);
}

TEST_CASE("pressure from an embedded gradient at second order") {
    auto err = [](int n) {
        const Grid g = build_grid(n, 4, n, 1, 1, 1);
        MetricContext ctx(g);
        auto q = [&](double x, double, double z) { return std::cos(2 * M_PI * x) * std::cos(M_PI * z / g.H); };
        const ScalarField qs = ScalarField::sample(g, q);
        // exact gradient sampled on faces, not the discrete one
        VectorField gq = VectorField::sample(g, [&](double x, double, double z) {
            return std::array<double, 3>{-2 * M_PI * std::sin(2 * M_PI * x) * std::cos(M_PI * z / g.H), 0.0,
                                         -M_PI / g.H * std::cos(2 * M_PI * x) * std::sin(M_PI * z / g.H)};
        });
        gq.zero_walls();
        // the sampled gradient annihilates only up to O(h^2); project it first
        const Functional F = project_E_neg12(ctx, embed(gq));
        const PressureRecovery r = pressure_from_functional(ctx, F, CellBox::whole(g));
        double e = 0, m = 0;
        for (double x : qs.data) m += x;
        m /= double(g.cells());
        for (std::size_t c = 0; c < g.cells(); ++c) e += std::pow(r.p.data[c] - (qs.data[c] - m), 2) * g.cell_volume();
        return std::sqrt(e);
    };
    const double e1 = err(16), e2 = err(32);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("pressure recovery: zero, mean gauge, uniqueness, non-annihilator rejection") {
    const Grid g = build_grid(8, 6, 8, 1, 1, 1);
    MetricContext ctx(g);
    const CellBox omega0{0, 4, 0, 6, 0, 4};
    CHECK(max_abs(pressure_from_functional(ctx, Functional(g), omega0).p.data) == 0.0);

    std::mt19937_64 rng(3);
    const ScalarField q = random_smooth_scalar(g, rng);
    const Functional F = embed(gradient(q));
    const PressureRecovery a = pressure_from_functional(ctx, F, omega0);
    CHECK(std::abs(box_mean(a.p, omega0)) < 1e-12);
    CHECK(a.residual < 1e-10);
    const PressureRecovery b = pressure_from_functional(ctx, F, omega0, PressureMethod::cg, 17);
    const PressureRecovery c = pressure_from_functional(ctx, F, omega0, PressureMethod::cg, 99);
    ScalarField d = a.p;
    for (std::size_t n = 0; n < d.data.size(); ++n) d.data[n] -= b.p.data[n];
    CHECK(max_abs(d.data) < 1e-10);
    for (std::size_t n = 0; n < d.data.size(); ++n) d.data[n] = b.p.data[n] - c.p.data[n];
    CHECK(max_abs(d.data) < 1e-10);

    std::mt19937_64 rng2(4);
    const Functional S = embed(random_solenoidal_field(ctx.poisson(), g, rng2));
    CHECK_THROWS_WITH_AS(pressure_from_functional(ctx, S, omega0), doctest::Contains("not an annihilator"), precondition_error);
    // projecting first makes it admissible
    CHECK_NOTHROW(pressure_from_functional(ctx, project_E_neg12(ctx, S), omega0));
}
