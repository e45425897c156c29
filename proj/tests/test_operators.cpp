#include <doctest.h>

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <random>

#include "slipns/operators.hpp"
#include "slipns/random_fields.hpp"

using namespace slipns;

namespace {

double field_max(const VectorField& v) {
    double m = 0;
    for (const auto* c : {&v.u, &v.v, &v.w})
        for (double x : *c) m = std::max(m, std::abs(x));
    return m;
}

// Smallest eigenvalue of nu U'' = -lambda U with Robin ends nu U'(0) = gamma U(0), -nu U'(H) = gamma U(H).
// The even mode cos(k(z - H/2)) gives nu k tan(k H / 2) = gamma.
double robin_eigenvalue(double nu, double gamma, double H) {
    auto f = [&](double k) { return nu * k * std::tan(k * H / 2) - gamma; };
    boost::uintmax_t it = 100;
    const auto r = boost::math::tools::toms748_solve(f, 1e-12, M_PI / H * (1 - 1e-12), boost::math::tools::eps_tolerance<double>(50), it);
    const double k = 0.5 * (r.first + r.second);
    return nu * k * k;
}

double robin_wavenumber(double nu, double gamma, double H) { return std::sqrt(robin_eigenvalue(nu, gamma, H) / nu); }

}  // namespace

TEST_CASE("Robin eigenvalue oracle") {
    // nu = gamma = H = 1: k tan(k/2) = 1
    const double l = robin_eigenvalue(1, 1, 1);
    const double k = std::sqrt(l);
    CHECK(k * std::tan(k / 2) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(l == doctest::Approx(1.7071).epsilon(1e-3));
}

TEST_CASE("slip Stokes form: symmetric, nonnegative, rigid translations") {
    const Grid g = build_grid(6, 5, 7, 1, 1, 1);
    for (double gamma : {0.0, 1.0}) {
        const SlipStokesOperator A(g, {1.0, gamma});
        const SpMat K = A.matrix();
        CHECK((SpMat(K.transpose()) - K).norm() < 1e-12 * K.norm());
        std::mt19937_64 rng(1);
        for (int s = 0; s < 10; ++s) {
            const VectorField v = random_smooth_field(g, rng);
            CHECK(A.form(v, v) >= 0);
        }
        const VectorField c = VectorField::sample(g, [](double, double, double) { return std::array<double, 3>{0.3, -0.2, 0.0}; });
        if (gamma == 0) {
            CHECK(field_max(A.dofs().unpack(apply_A(A, c).cov)) < 1e-12);
        } else {
            CHECK(A.form(c, c) > 0.1);
        }
    }
}

TEST_CASE("slip Stokes form on the linear shear converges to its hand integral") {
    // nu = gamma = 1, v = (z, 0, 0): 2 int |(grad v)_s|^2 = 1, wall term = 1
    auto err = [](int n) {
        const Grid g = build_grid(4, 4, n, 1, 1, 1);
        const SlipStokesOperator A(g, {1.0, 1.0});
        const auto v = VectorField::sample(g, [](double, double, double z) { return std::array<double, 3>{z, 0, 0}; });
        return std::abs(A.form(v, v) - 2.0);
    };
    const double e1 = err(32), e2 = err(64);
    CHECK(e2 < e1);
    CHECK(e2 < 0.05);
}

TEST_CASE("Korn ratio and the bounds for A and B on smooth fields") {
    const Grid g = build_grid(8, 8, 8, 1, 1, 1);
    const SlipStokesOperator A(g, {1.0, 1.0});
    MetricContext ctx(g);
    std::mt19937_64 rng(2);
    double kmin = 1e300, amax = 0, bmax = 0;
    for (int s = 0; s < 50; ++s) {
        const VectorField v = random_smooth_field(g, rng);
        kmin = std::min(kmin, korn_ratio(A, v));
        amax = std::max(amax, a_bound_ratio(ctx, A, v));
        const VectorField u = random_solenoidal_field(ctx.poisson(), g, rng);
        bmax = std::max(bmax, b_bound_ratio(ctx, u, v));
    }
    CHECK(kmin > 0);
    CHECK(std::isfinite(amax));
    CHECK(std::isfinite(bmax));
    CHECK(bmax > 0);
}

TEST_CASE("skew convection: energy neutral, constant transported field") {
    const Grid g = build_grid(8, 6, 7, 1.0, 1.1, 0.9);
    PoissonSolver ps(g);
    std::mt19937_64 rng(3);
    for (int s = 0; s < 5; ++s) {
        const VectorField u = random_solenoidal_field(ps, g, rng);
        const Functional B = apply_B(u, u);
        CHECK(std::abs(pairing(B, u)) < 1e-12 * std::max(1.0, B.cov.norm()));
        const VectorField w = VectorField::sample(g, [](double, double, double) { return std::array<double, 3>{1.0, 2.0, 0.0}; });
        CHECK(apply_B(u, w).cov.norm() < 1e-12);
    }
}

TEST_CASE("resolvent: round trip, zero, symmetry, k = 0 precondition") {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    std::mt19937_64 rng(4);
    const SlipStokesOperator A(g, {0.7, 0.5});
    for (double k : {0.0, 1.0, 25.0}) {
        const Resolvent R(A, k);
        const VectorField v = random_smooth_field(g, rng);
        const Functional gv = apply_A(A, v) + k * embed(v);
        CHECK(field_max(R.solve(gv) - v) < 1e-9);
        CHECK(field_max(R.solve(Functional(g))) == 0.0);
        const Functional h1 = embed(random_smooth_field(g, rng)), h2 = embed(random_smooth_field(g, rng));
        CHECK(pairing(h2, R.solve(h1)) == doctest::Approx(pairing(h1, R.solve(h2))).epsilon(1e-10));
    }
    const SlipStokesOperator A0(g, {1.0, 0.0});
    CHECK_THROWS_AS(Resolvent(A0, 0.0), precondition_error);
}

TEST_CASE("Yosida approximation: selfadjoint, commuting, converging, contractive") {
    const Grid g = build_grid(6, 6, 6, 1, 1, 1);
    MetricContext ctx(g);
    const SlipStokesOperator A(g, {1.0, 1.0});
    std::mt19937_64 rng(5);
    const VectorField u = random_solenoidal_field(ctx.poisson(), g, rng);
    const VectorField v = random_solenoidal_field(ctx.poisson(), g, rng);
    const Yosida J1(ctx, A, 1), J10(ctx, A, 10);

    const VectorField ju = J10.apply(u);
    CHECK(norm(divergence(ju), q_infinity) < 1e-10);
    CHECK(ju.is_tangential());
    CHECK(dot(ju, v) == doctest::Approx(dot(u, J10.apply(v))).epsilon(1e-9));
    CHECK(field_max(J1.apply(J10.apply(u)) - J10.apply(J1.apply(u))) < 1e-9 * field_max(u));

    double prev = 1e300;
    for (double k : {1.0, 10.0, 100.0, 1000.0}) {
        const double e = norm(yosida(ctx, A, u, k) - u, 2.0);
        CHECK(e < prev);
        prev = e;
    }

    // power iteration for the L2 operator norm
    VectorField x = v;
    double est = 0;
    for (int it = 0; it < 30; ++it) {
        const VectorField y = J1.apply(x);
        est = norm(y, 2.0) / norm(x, 2.0);
        x = (1.0 / norm(y, 2.0)) * y;
    }
    CHECK(est <= 1.0);
    // the top of the spectrum of J^(1) is 1 / (1 + lambda_1)
    CHECK(est == doctest::Approx(1 / (1 + robin_eigenvalue(1, 1, 1))).epsilon(0.03));

    VectorField bad = u;
    bad.u[0] += 1.0;
    CHECK_THROWS_AS((void)J1.apply(bad), precondition_error);
}

TEST_CASE("unsteady Stokes: rest stays at rest") {
    const Grid g = build_grid(4, 4, 6, 1, 1, 1);
    MetricContext ctx(g);
    const SlipStokesOperator A(g, {1.0, 1.0});
    const auto r = unsteady_stokes(ctx, A, [&](double) { return VectorField(g); }, VectorField(g), 0.01, 0.05);
    CHECK(r.velocity.size() == 6);
    for (const auto& v : r.velocity) CHECK(field_max(v) == 0.0);
    for (double x : r.pi1q_norm) CHECK(x == 0.0);
}

TEST_CASE("unsteady Stokes eigenmode decays at the Robin rate") {
    const double lam = robin_eigenvalue(1, 1, 1), kw = robin_wavenumber(1, 1, 1);
    auto rate_error = [&](int nz, double dt) {
        const Grid g = build_grid(4, 4, nz, 1, 1, 1);
        MetricContext ctx(g);
        const SlipStokesOperator A(g, {1.0, 1.0});
        const auto u0 = VectorField::sample(g, [&](double, double, double z) { return std::array<double, 3>{std::cos(kw * (z - 0.5)), 0, 0}; });
        const int n = 10;
        const auto r = unsteady_stokes(ctx, A, [&](double) { return VectorField(g); }, u0, dt, n * dt);
        const double rate = -std::log(norm(r.velocity[n], 2.0) / norm(r.velocity[n - 1], 2.0)) / dt;
        return std::abs(rate - lam);
    };
    const double e1 = rate_error(16, 0.02), e2 = rate_error(32, 0.01);
    CHECK(e2 < e1);
    CHECK(e2 < 0.05 * lam);
}

TEST_CASE("unsteady Stokes: divergence-free steps and a stable estimate ratio") {
    auto ratio = [](int n) {
        const Grid g = build_grid(n, 4, n, 1, 1, 1);
        MetricContext ctx(g);
        const SlipStokesOperator A(g, {1.0, 1.0});
        auto force = [&](double t) {
            return VectorField::sample(g, [&](double x, double, double z) {
                return std::array<double, 3>{std::cos(2 * M_PI * x) * std::cos(M_PI * z) * (1 + t), 0.0,
                                             std::sin(2 * M_PI * x) * std::sin(M_PI * z)};
            });
        };
        const auto r = unsteady_stokes(ctx, A, [&](double t) { VectorField f = force(t); f.zero_walls(); return f; }, VectorField(g), 0.01, 0.2);
        CHECK(r.max_divergence < 1e-9);
        return r.estimate_ratio(2.0, 0.0);
    };
    const double c1 = ratio(8), c2 = ratio(16);
    CHECK(c1 > 0);
    CHECK(std::abs(c2 - c1) / c1 < 0.25);
}

TEST_CASE("maximal-regularity exponent truth table") {
    CHECK(maximal_regularity_exponents(Rational(8, 7), Rational(4, 3)));
    CHECK_FALSE(maximal_regularity_exponents(Rational(2), Rational(3, 2)));
    CHECK_FALSE(maximal_regularity_exponents(Rational(1), Rational(1)));
    CHECK_FALSE(maximal_regularity_exponents(Rational(8, 7), Rational(5, 4)));
    CHECK_FALSE(maximal_regularity_exponents(Rational::infinity(), Rational(4, 3)));
    // every admissible q in (1, 3/2) on a rational grid pairs with r = 2 / (4 - 3/q)
    int hits = 0;
    for (int a = 11; a < 15; ++a) {
        const Rational q(a, 10);
        const Rational r = Rational(2) / (Rational(4) + Rational(-3) / q);
        if (maximal_regularity_exponents(r, q)) ++hits;
    }
    CHECK(hits == 4);
    CHECK(Rational::parse("8/7") == Rational(16, 14));
    CHECK(Rational::parse("inf").inf);
    CHECK_THROWS(Rational::parse("8/x"));
}
