// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pressure.hpp"
#include "rational.hpp"

namespace slipns {

using Point = std::array<double, 3>;

/**
 * @brief Radial cut-off: 1 on [0, rho1], 0 beyond rho2, a smoothstep polynomial in between.
 *
 * degree 5 is C^2 at the seams, degree 7 is C^3.
 */
struct CutoffProfile {
    double rho1 = 0.1, rho2 = 0.2;
    int degree = 5;

    void validate() const {
        if (!(rho1 > 0 && rho2 > rho1)) throw precondition_error("cut-off needs 0 < rho1 < rho2");
        if (degree != 5 && degree != 7) throw precondition_error("cut-off degree must be 5 or 7");
    }

    /// Smoothstep S(s) and its first two derivatives in s.
    template <class T>
    [[nodiscard]] std::array<T, 3> step(const T& s) const {
        if (degree == 5) {
            const T s2 = s * s;
            return {s2 * s * (10.0 - 15.0 * s + 6.0 * s2), 30.0 * s2 * (1.0 - 2.0 * s + s2), 60.0 * s * (1.0 - 3.0 * s + 2.0 * s2)};
        }
        const T s2 = s * s, s3 = s2 * s;
        return {s2 * s2 * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s3), 140.0 * s3 * (1.0 - 3.0 * s + 3.0 * s2 - s3),
                420.0 * s2 * (1.0 - 4.0 * s + 5.0 * s2 - 2.0 * s3)};
    }

    /// eta, eta', eta'' at radius r.
    template <class T>
    [[nodiscard]] std::array<T, 3> eval(const T& r) const {
        if (r <= rho1) return {T(1.0), T(0.0), T(0.0)};
        if (r >= rho2) return {T(0.0), T(0.0), T(0.0)};
        const double d = rho2 - rho1;
        const auto S = step(T((r - rho1) / d));
        return {1.0 - S[0], -S[1] / d, -S[2] / (d * d)};
    }
    [[nodiscard]] double eta(double r) const { return eval(r)[0]; }
    [[nodiscard]] double deta(double r) const { return eval(r)[1]; }
    [[nodiscard]] double d2eta(double r) const { return eval(r)[2]; }
};

/**
 * @brief Radial primitive F(s) = -int_s^inf eta'(sigma) / sigma d sigma, tabulated on [rho1, rho2].
 *
 * Values between nodes use cubic Hermite interpolation with the exact slope eta'(s)/s.
 */
struct RadialTable {
    CutoffProfile profile;
    std::vector<double> s, F;

    [[nodiscard]] double dF(double r) const { return r > 0 ? profile.deta(r) / r : 0.0; }
    [[nodiscard]] double d2F(double r) const { return r > 0 ? (profile.d2eta(r) * r - profile.deta(r)) / (r * r) : 0.0; }
    [[nodiscard]] double operator()(double r) const {
        if (r >= profile.rho2) return 0.0;
        if (r <= profile.rho1) return F.front();
        const double h = s[1] - s[0];
        const auto i = std::min<std::size_t>(std::size_t((r - s[0]) / h), s.size() - 2);
        const double t = (r - s[i]) / h, t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * F[i] + (t3 - 2 * t2 + t) * h * dF(s[i]) + (-2 * t3 + 3 * t2) * F[i + 1] + (t3 - t2) * h * dF(s[i + 1]);
    }
};

inline RadialTable cutoff_F(const CutoffProfile& profile, int nodes = 257, double tol = 1e-12) {
    profile.validate();
    RadialTable t{profile, {}, {}};
    t.s.resize(std::size_t(nodes));
    t.F.assign(std::size_t(nodes), 0.0);
    const double h = (profile.rho2 - profile.rho1) / (nodes - 1);
    for (int i = 0; i < nodes; ++i) t.s[std::size_t(i)] = profile.rho1 + i * h;
    auto integrand = [&](double x) { return profile.deta(x) / x; };
    for (int i = nodes - 2; i >= 0; --i) {
        double err = 0;
        const double piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, t.s[std::size_t(i)], t.s[std::size_t(i) + 1], 15, tol, &err);
        if (!std::isfinite(piece) || err > 1e-8) throw solver_error("cutoff_F: radial quadrature did not converge (error estimate " + std::to_string(err) + ")");
        t.F[std::size_t(i)] = t.F[std::size_t(i) + 1] - piece;
    }
    return t;
}

/// Gauss-Legendre nodes and weights on [a, b].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
    const auto z = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x, w;
    auto push = [&](double t) {
        const double dp = boost::math::legendre_p_prime(n, t);
        x.push_back(0.5 * (a + b) + 0.5 * (b - a) * t);
        w.push_back(0.5 * (b - a) * 2.0 / ((1 - t * t) * dp * dp));
    };
    for (double t : z) {
        push(t);
        if (t != 0.0) push(-t);
    }
    return {x, w};
}

/// Product rule on the ball: Gauss in r on [0, rho1] and [rho1, rho2], Gauss in cos(theta), trapezoid in phi.
struct BallQuadrature {
    int radial = 4, polar = 4, azimuth = 8;

    [[nodiscard]] BallQuadrature refined(int factor) const { return {radial * factor, polar * factor, azimuth * factor}; }

    /// Calls f(y, r, weight) at every node; the r^2 Jacobian is in the weight.
    template <class F>
    void for_each(const CutoffProfile& c, F&& f) const {
        const auto [mu, wmu] = gauss_legendre(polar, -1, 1);
        for (const auto& panel : {gauss_legendre(radial, 0, c.rho1), gauss_legendre(radial, c.rho1, c.rho2)}) {
            for (std::size_t a = 0; a < panel.first.size(); ++a) {
                const double r = panel.first[a];
                for (std::size_t b = 0; b < mu.size(); ++b) {
                    const double st = std::sqrt(1 - mu[b] * mu[b]);
                    for (int m = 0; m < azimuth; ++m) {
                        const double ph = 2 * M_PI * m / azimuth;
                        const Point y{r * st * std::cos(ph), r * st * std::sin(ph), r * mu[b]};
                        f(y, r, panel.second[a] * r * r * wmu[b] * 2 * M_PI / azimuth);
                    }
                }
            }
        }
    }
};

struct ProbePoint {
    Point x0{0.5, 0.5, 0.5};
    Point e{1, 0, 0};
    CutoffProfile cutoff;
    BallQuadrature quadrature;

    /// The ball must sit strictly inside the channel, with room for interpolation stencils on a grid.
    void validate(const Grid* g = nullptr, double H = 0) const {
        cutoff.validate();
        const double ne = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
        if (std::abs(ne - 1) > 1e-14) throw precondition_error("probe direction must be a unit vector");
        if (g) {
            H = g->H;
            const double hmax = std::max(g->hx, std::max(g->hy, g->hz));
            if (cutoff.rho2 < 4 * hmax) throw precondition_error("probe cut-off is under-resolved (rho2 < 4 cells)");
            if (2 * cutoff.rho2 >= std::min(g->Lx, g->Ly)) throw precondition_error("probe ball wraps around the periodic box");
            if (x0[2] - cutoff.rho2 < 2 * g->hz || x0[2] + cutoff.rho2 > H - 2 * g->hz) throw precondition_error("probe ball leaves the domain");
        } else if (H > 0 && (x0[2] - cutoff.rho2 <= 0 || x0[2] + cutoff.rho2 >= H)) {
            throw precondition_error("probe ball leaves the domain");
        }
    }
};

/**
 * @brief What the Newtonian representation needs from a pressure around the probe:
 * g = grad p . e, grad g, Lap g and Lap p, each at x0 + y.
 */
struct ProbeSource {
    std::function<double(const Point&)> g, lap_g, lap_p;
    std::function<Point(const Point&)> grad_g;
};

/// Fourth-order central differences of a callable pressure with step delta.
inline ProbeSource probe_source(std::function<double(const Point&)> p, const Point& x0, const Point& e, double delta) {
    auto shift = [](Point a, const Point& d, double s) {
        for (int c = 0; c < 3; ++c) a[c] += s * d[c];
        return a;
    };
    auto d1 = [=](const std::function<double(const Point&)>& f, const Point& y, const Point& d) {
        return (8 * (f(shift(y, d, delta)) - f(shift(y, d, -delta))) - (f(shift(y, d, 2 * delta)) - f(shift(y, d, -2 * delta)))) / (12 * delta);
    };
    auto d2 = [=](const std::function<double(const Point&)>& f, const Point& y, const Point& d) {
        return (-f(shift(y, d, 2 * delta)) + 16 * f(shift(y, d, delta)) - 30 * f(y) + 16 * f(shift(y, d, -delta)) - f(shift(y, d, -2 * delta))) / (12 * delta * delta);
    };
    static const Point axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    auto pa = [p, x0](const Point& y) { return p({x0[0] + y[0], x0[1] + y[1], x0[2] + y[2]}); };
    std::function<double(const Point&)> g = [=](const Point& y) { return d1(pa, y, e); };
    ProbeSource s;
    s.g = g;
    s.grad_g = [=](const Point& y) { return Point{d1(g, y, axes[0]), d1(g, y, axes[1]), d1(g, y, axes[2])}; };
    s.lap_g = [=](const Point& y) { return d2(g, y, axes[0]) + d2(g, y, axes[1]) + d2(g, y, axes[2]); };
    s.lap_p = [=](const Point& y) { return d2(pa, y, axes[0]) + d2(pa, y, axes[1]) + d2(pa, y, axes[2]); };
    return s;
}

/// Tricubic Lagrange interpolation of a cell-centred field; periodic in x and y.
inline double interpolate(const ScalarField& f, const Point& x) {
    const Grid& g = f.grid;
    const double sx = x[0] / g.hx - 0.5, sy = x[1] / g.hy - 0.5, sz = x[2] / g.hz - 0.5;
    const int ix = int(std::floor(sx)), iy = int(std::floor(sy)), iz = std::clamp(int(std::floor(sz)), 1, g.nz - 3);
    auto weights = [](double t) {
        return std::array<double, 4>{-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2, -(t + 1) * t * (t - 2) / 2, (t + 1) * t * (t - 1) / 6};
    };
    const auto wx = weights(sx - ix), wy = weights(sy - iy), wz = weights(sz - iz);
    double s = 0;
    for (int c = 0; c < 4; ++c)
        for (int b = 0; b < 4; ++b)
            for (int a = 0; a < 4; ++a) s += wx[a] * wy[b] * wz[c] * f(ix - 1 + a, iy - 1 + b, iz - 1 + c);
    return s;
}

namespace detail {

/// Second-order central derivative of a cell-centred field along axis a; one-sided rows at the walls.
inline ScalarField central_diff(const ScalarField& p, int a) {
    const Grid& g = p.grid;
    ScalarField r(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (a == 0) r(i, j, k) = (p(i + 1, j, k) - p(i - 1, j, k)) / (2 * g.hx);
                else if (a == 1) r(i, j, k) = (p(i, j + 1, k) - p(i, j - 1, k)) / (2 * g.hy);
                else if (k == 0) r(i, j, k) = (p(i, j, 1) - p(i, j, 0)) / g.hz;
                else if (k == g.nz - 1) r(i, j, k) = (p(i, j, k) - p(i, j, k - 1)) / g.hz;
                else r(i, j, k) = (p(i, j, k + 1) - p(i, j, k - 1)) / (2 * g.hz);
            }
    return r;
}

/// Compact second difference along axis a; one-sided closure (copy of the neighbour row) at the walls.
inline ScalarField second_diff(const ScalarField& p, int a) {
    const Grid& g = p.grid;
    ScalarField r(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = 2 * p(i, j, k);
                if (a == 0) r(i, j, k) = (p(i + 1, j, k) - c + p(i - 1, j, k)) / (g.hx * g.hx);
                else if (a == 1) r(i, j, k) = (p(i, j + 1, k) - c + p(i, j - 1, k)) / (g.hy * g.hy);
                else {
                    const int kk = std::clamp(k, 1, g.nz - 2);
                    r(i, j, k) = (p(i, j, kk + 1) - 2 * p(i, j, kk) + p(i, j, kk - 1)) / (g.hz * g.hz);
                }
            }
    return r;
}

/// D^alpha by compact second differences for each repeated pair and a central difference for the rest.
inline ScalarField derivative(const ScalarField& f, const std::array<int, 3>& alpha) {
    ScalarField d = f;
    for (int ax = 0; ax < 3; ++ax) {
        for (int m = 0; m + 1 < alpha[std::size_t(ax)]; m += 2) d = second_diff(d, ax);
        if (alpha[std::size_t(ax)] % 2) d = central_diff(d, ax);
    }
    return d;
}

}  // namespace detail

/// Grid pressure: derivatives by central differences on the grid, then tricubic interpolation.
inline ProbeSource probe_source(const ScalarField& p, const Point& x0, const Point& e) {
    ScalarField g(p.grid);
    for (int a = 0; a < 3; ++a) {
        const ScalarField d = detail::central_diff(p, a);
        for (std::size_t c = 0; c < g.data.size(); ++c) g.data[c] += e[a] * d.data[c];
    }
    auto gx = std::make_shared<std::array<ScalarField, 3>>(std::array<ScalarField, 3>{detail::central_diff(g, 0), detail::central_diff(g, 1), detail::central_diff(g, 2)});
    auto lg = std::make_shared<ScalarField>(laplacian(g));
    auto lp = std::make_shared<ScalarField>(laplacian(p));
    auto gp = std::make_shared<ScalarField>(std::move(g));
    auto at = [x0](const Point& y) { return Point{x0[0] + y[0], x0[1] + y[1], x0[2] + y[2]}; };
    ProbeSource s;
    s.g = [=](const Point& y) { return interpolate(*gp, at(y)); };
    s.grad_g = [=](const Point& y) { return Point{interpolate((*gx)[0], at(y)), interpolate((*gx)[1], at(y)), interpolate((*gx)[2], at(y))}; };
    s.lap_g = [=](const Point& y) { return interpolate(*lg, at(y)); };
    s.lap_p = [=](const Point& y) { return interpolate(*lp, at(y)); };
    return s;
}

/**
 * @brief grad p(x0) . e = -(P1 + 2 P2 + P3) / (4 pi) through the cut-off Newtonian potential.
 *
 * Besides the three displayed integrals this carries the rewritten forms used in the estimates:
 * P1 = -P2 + P12, P2 = -int Lap F(|y|) g = int phi Lap p, P3 = -int d_e(eta/|y|) Lap p.
 */
struct NewtonianResult {
    double value = 0, P1 = 0, P2 = 0, P3 = 0;
    double P12 = 0;     ///< int eta'(|y|) / |y|^2 g
    double P2_ibp = 0;  ///< -int Lap F(|y|) g
    double P2_phi = 0;  ///< int phi Lap p
    double P3_ibp = 0;  ///< -int d_e(eta(|y|)/|y|) Lap p
};

inline NewtonianResult grad_p_newtonian(const ProbeSource& src, const ProbePoint& probe) {
    probe.validate();
    const CutoffProfile& c = probe.cutoff;
    const Point& e = probe.e;
    NewtonianResult r;
    probe.quadrature.for_each(c, [&](const Point& y, double rr, double wt) {
        const auto eta = c.eval(rr);
        const Point yh{y[0] / rr, y[1] / rr, y[2] / rr};
        const double ye = yh[0] * e[0] + yh[1] * e[1] + yh[2] * e[2];
        const double g = src.g(y), lg = src.lap_g(y);
        const Point gg = src.grad_g(y);
        const double lap_eta = eta[2] + 2 * eta[1] / rr, lapF = eta[2] / rr + eta[1] / (rr * rr);
        r.P1 += wt * lap_eta / rr * g;
        r.P2 += wt * eta[1] / rr * (yh[0] * gg[0] + yh[1] * gg[1] + yh[2] * gg[2]);
        r.P3 += wt * eta[0] / rr * lg;
        r.P12 += wt * eta[1] / (rr * rr) * g;
        r.P2_ibp -= wt * lapF * g;
        if (eta[1] != 0.0 || eta[0] != 0.0) {
            const double lp = src.lap_p(y);
            r.P2_phi += wt * eta[1] / rr * ye * lp;
            r.P3_ibp -= wt * (eta[1] / rr - eta[0] / (rr * rr)) * ye * lp;
        }
    });
    r.value = -(r.P1 + 2 * r.P2 + r.P3) / (4 * M_PI);
    return r;
}

inline NewtonianResult grad_p_newtonian(std::function<double(const Point&)> p, const ProbePoint& probe, double delta = 0) {
    if (delta <= 0) delta = 1e-2 * probe.cutoff.rho2;
    return grad_p_newtonian(probe_source(std::move(p), probe.x0, probe.e, delta), probe);
}

inline NewtonianResult grad_p_newtonian(const ScalarField& p, const ProbePoint& probe) {
    probe.validate(&p.grid);
    return grad_p_newtonian(probe_source(p, probe.x0, probe.e), probe);
}

/**
 * @brief Helmholtz split of Lap F(|y|) e on the ball: phi = grad F . e, w = Lap F e - grad phi.
 *
 * Templated so that derivatives of phi and w can be taken by forward-mode autodiff.
 */
struct BallSplit {
    CutoffProfile profile;
    Point e{1, 0, 0};

    /// F'/s, Lap F and (F'/s)' / s as functions of the radius; all vanish where eta' does.
    template <class T>
    [[nodiscard]] std::array<T, 3> radial(const T& r) const {
        const auto eta = profile.eval(r);
        // k = F'(r)/r = eta'/r^2, Lap F = eta''/r + eta'/r^2, k'/r = eta''/r^3 - 2 eta'/r^4
        return {eta[1] / (r * r), eta[2] / r + eta[1] / (r * r), eta[2] / (r * r * r) - 2.0 * eta[1] / (r * r * r * r)};
    }
    template <class T>
    [[nodiscard]] T phi(const std::array<T, 3>& y) const {
        using std::sqrt;
        const T r = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        if (r <= profile.rho1 || r >= profile.rho2) return T(0.0);
        return radial(r)[0] * (y[0] * e[0] + y[1] * e[1] + y[2] * e[2]);
    }
    template <class T>
    [[nodiscard]] std::array<T, 3> w(const std::array<T, 3>& y) const {
        using std::sqrt;
        const T r = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        if (r <= profile.rho1 || r >= profile.rho2) return {T(0.0), T(0.0), T(0.0)};
        const auto k = radial(r);
        const T ye = y[0] * e[0] + y[1] * e[1] + y[2] * e[2];
        // grad phi = k e + (k'/r)(y . e) y
        std::array<T, 3> out;
        for (int c = 0; c < 3; ++c) out[std::size_t(c)] = k[1] * e[std::size_t(c)] - (k[0] * e[std::size_t(c)] + k[2] * ye * y[std::size_t(c)]);
        return out;
    }
    /// Lap F(|y|) e, the field being split.
    [[nodiscard]] Point source(const Point& y) const {
        const double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        if (r <= profile.rho1 || r >= profile.rho2) return {0, 0, 0};
        const double l = radial(r)[1];
        return {l * e[0], l * e[1], l * e[2]};
    }
    [[nodiscard]] Point grad_phi(const Point& y) const {
        Point out{};
        for (int a = 0; a < 3; ++a) out[std::size_t(a)] = derivative_along(y, a, [&](const auto& yy) { return phi(yy); });
        return out;
    }
    /// div w by forward-mode differentiation of the analytic formulas.
    [[nodiscard]] double div_w(const Point& y) const {
        double s = 0;
        for (int a = 0; a < 3; ++a) s += derivative_along(y, a, [&](const auto& yy) { return w(yy)[std::size_t(a)]; });
        return s;
    }

private:
    template <class F>
    static double derivative_along(const Point& y, int a, F&& f) {
        using boost::math::differentiation::make_fvar;
        const auto t = make_fvar<double, 1>(0.0);
        using T = std::decay_t<decltype(t)>;
        std::array<T, 3> yy{T(y[0]), T(y[1]), T(y[2])};
        yy[std::size_t(a)] = yy[std::size_t(a)] + t;
        return f(yy).derivative(1);
    }
};

inline BallSplit ball_split(const CutoffProfile& profile, const Point& e) {
    profile.validate();
    return {profile, e};
}

/// Whole-channel split k = eta'(|y - x0|)/|y - x0|^2 e = grad psi + z with d psi/dn = 0.
struct NeumannSplit {
    VectorField k, grad_psi, z;
    ScalarField psi;
    double compat = 0;        ///< mean of the Poisson right side before removal
    double div_residual = 0;  ///< max |div z|
};

/// Minimum-image displacement y - x0 in the periodic directions.
inline Point displacement(const Grid& g, const Point& y, const Point& x0) {
    Point d{y[0] - x0[0], y[1] - x0[1], y[2] - x0[2]};
    d[0] -= g.Lx * std::round(d[0] / g.Lx);
    d[1] -= g.Ly * std::round(d[1] / g.Ly);
    return d;
}

inline NeumannSplit neumann_split(const PoissonSolver& ps, const Grid& g, const ProbePoint& probe) {
    probe.validate(&g);
    const CutoffProfile& c = probe.cutoff;
    NeumannSplit s;
    s.k = VectorField::sample(g, [&](double x, double y, double z) {
        const Point d = displacement(g, {x, y, z}, probe.x0);
        const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        const double a = r > 0 ? c.deta(r) / (r * r) : 0.0;
        return std::array<double, 3>{a * probe.e[0], a * probe.e[1], a * probe.e[2]};
    });
    s.k.zero_walls();
    auto h = helmholtz_project(ps, s.k);
    s.psi = std::move(h.psi);
    s.grad_psi = std::move(h.grad_psi);
    s.z = std::move(h.sigma);
    s.compat = h.compat;
    s.div_residual = norm(divergence(s.z), q_infinity);
    return s;
}

/**
 * @brief The pairing I = int grad psi . [u.grad u - nu Lap u - f], so that P12 = -I for a flow
 * (the d_t u part drops since grad psi is orthogonal to solenoidal tangential fields).
 *
 * The direct value is a volume sum. The rewritten value integrates by parts:
 * convection = -int Hess psi : (u (x) u), viscous = gamma int_walls grad psi . u dS
 * plus the wall-curvature term, which vanishes identically on the flat channel walls.
 */
struct P12Eval {
    double direct = 0, convection_direct = 0, viscous_direct = 0, forcing = 0;
    double convection = 0, viscous = 0, curvature = 0;
    [[nodiscard]] double rewritten() const { return convection + viscous + curvature - forcing; }
};

inline P12Eval p12_eval(const VectorField& u, const NeumannSplit& sp, const BoundaryData& bd, const VectorField* f = nullptr, double div_tol = 1e-8) {
    require_tangential(u, "p12_eval");
    const Grid& g = u.grid;
    if (norm(divergence(u), q_infinity) > div_tol * std::max(1.0, norm(u, q_infinity)) / g.hmin())
        throw precondition_error("p12_eval needs a solenoidal field");
    P12Eval r;
    r.convection_direct = dot(sp.grad_psi, advection(u, u));
    r.viscous_direct = -bd.nu * dot(sp.grad_psi, laplacian(u, bd));
    if (f) r.forcing = dot(sp.grad_psi, *f);
    r.direct = r.convection_direct + r.viscous_direct - r.forcing;

    const ScalarField& psi = sp.psi;
    const auto uc = to_centers(u);
    // Hessian at centres from the mirror (zero-flux) closure of psi at the walls
    auto at = [&](int i, int j, int k) { return psi(i, j, std::clamp(k, 0, g.nz - 1)); };
    const double V = g.cell_volume();
    double conv = 0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = at(i, j, k);
                double H[3][3];
                H[0][0] = (at(i + 1, j, k) - 2 * c + at(i - 1, j, k)) / (g.hx * g.hx);
                H[1][1] = (at(i, j + 1, k) - 2 * c + at(i, j - 1, k)) / (g.hy * g.hy);
                H[2][2] = (at(i, j, k + 1) - 2 * c + at(i, j, k - 1)) / (g.hz * g.hz);
                H[0][1] = H[1][0] = (at(i + 1, j + 1, k) - at(i + 1, j - 1, k) - at(i - 1, j + 1, k) + at(i - 1, j - 1, k)) / (4 * g.hx * g.hy);
                // d_z psi at the centre from the two faces, the wall face flux being zero
                auto dz = [&](int ii, int jj) {
                    const double top = k + 1 < g.nz ? (at(ii, jj, k + 1) - at(ii, jj, k)) / g.hz : 0.0;
                    const double bot = k > 0 ? (at(ii, jj, k) - at(ii, jj, k - 1)) / g.hz : 0.0;
                    return 0.5 * (top + bot);
                };
                H[0][2] = H[2][0] = (dz(i + 1, j) - dz(i - 1, j)) / (2 * g.hx);
                H[1][2] = H[2][1] = (dz(i, j + 1) - dz(i, j - 1)) / (2 * g.hy);
                const double uu[3] = {uc[0](i, j, k), uc[1](i, j, k), uc[2](i, j, k)};
                double s = 0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) s += H[a][b] * uu[a] * uu[b];
                conv -= V * s;
            }
    r.convection = conv;

    // wall terms; psi at the wall equals the first cell value to second order (zero normal derivative)
    for (Wall wall : {Wall::bottom, Wall::top}) {
        const SurfaceVector t = trace(u, wall);
        const int k0 = wall == Wall::bottom ? 0 : g.nz - 1;
        double fric = 0, curv = 0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t n = g.c(i, j, 0);
                const double px = (psi(i, j, k0) - psi(i - 1, j, k0)) / g.hx;  // at (xf, yc), where t.u lives
                const double py = (psi(i, j, k0) - psi(i, j - 1, k0)) / g.hy;
                fric += px * t.u[n] + py * t.v[n];
                // d_j psi d_j (n . u): the normal component is identically zero on the wall
                const double dnx = (t.w[n] - t.w[g.c(i - 1, j, 0)]) / g.hx, dny = (t.w[n] - t.w[g.c(i, j - 1, 0)]) / g.hy;
                curv += px * dnx + py * dny;
            }
        r.viscous += bd.gamma * fric * g.hx * g.hy;
        // the (d_j n_i) u_i part is absent: d_j n_i = 0 on planar walls
        r.curvature -= 2 * bd.nu * curv * g.hx * g.hy;
    }
    return r;
}

/**
 * @brief L^r in time of the L^s norm of |u| over a box, on a time window.
 *
 * Trapezoidal rule over the stored steps inside the window; s or r may be infinite.
 */
inline double serrin_norm(const WeakSolutionTrajectory& tr, const Rational& r, const Rational& s, const CellBox& box, double t1, double t2) {
    if (!serrin_check(r, s)) throw precondition_error("serrin_norm: exponents " + r.str() + ", " + s.str() + " violate 2/r + 3/s = 1");
    if (tr.u.empty() || t1 < tr.times.front() - 1e-12 || t2 > tr.times.back() + 1e-12 || !(t1 < t2))
        throw precondition_error("serrin_norm: window outside the trajectory");
    const Grid& g = tr.grid;
    box.validate(g);
    auto space = [&](const VectorField& u) {
        const auto c = to_centers(u);
        double acc = 0;
        for (int k = box.k0; k < box.k1; ++k)
            for (int j = box.j0; j < box.j1; ++j)
                for (int i = box.i0; i < box.i1; ++i) {
                    const double m = std::sqrt(c[0](i, j, k) * c[0](i, j, k) + c[1](i, j, k) * c[1](i, j, k) + c[2](i, j, k) * c[2](i, j, k));
                    acc = s.inf ? std::max(acc, m) : acc + std::pow(m, s.value()) * g.cell_volume();
                }
        return s.inf ? acc : std::pow(acc, 1 / s.value());
    };
    std::vector<double> t, v;
    for (std::size_t n = 0; n < tr.u.size(); ++n)
        if (tr.times[n] >= t1 - 1e-12 && tr.times[n] <= t2 + 1e-12) {
            t.push_back(tr.times[n]);
            v.push_back(space(tr.u[n]));
        }
    if (t.size() < 2) throw precondition_error("serrin_norm: window holds fewer than two steps");
    const double rr = r.value();
    double acc = 0;
    for (std::size_t n = 1; n < t.size(); ++n) acc += 0.5 * (t[n] - t[n - 1]) * (std::pow(v[n], rr) + std::pow(v[n - 1], rr));
    return std::pow(acc, 1 / rr);
}

/// One row of the interior regularity ledger: max over |alpha| = order of max over the box of |D^alpha f|.
struct RegularityRow {
    double t = 0;
    int order = 0;
    double p = 0, dtu = 0;
};

struct RegularityLedger {
    std::vector<RegularityRow> rows;
    std::vector<double> p_l4, dtu_l4;  ///< indexed by order
};

/**
 * @brief L^4 in time over (t1 + eps, t2 - eps) of the L^inf norm over the box of D^alpha p and D^alpha d_t u.
 *
 * Derivatives are compact second and central first differences; d_t u is the backward difference of the stored steps.
 */
inline RegularityLedger regularity_ledger(const WeakSolutionTrajectory& tr, const PressureTrajectory& p, const CellBox& box, double eps, int alpha_max) {
    const Grid& g = tr.grid;
    box.validate(g);
    if (box.k0 < alpha_max || box.k1 > g.nz - alpha_max || box.k0 >= box.k1) throw precondition_error("regularity_ledger: box must stay away from the walls");
    if (p.times.size() != tr.u.size() || tr.u.size() < 2) throw precondition_error("regularity_ledger: pressure and velocity series differ");
    const double t1 = tr.times.front(), t2 = tr.times.back();
    if (!(eps >= 0 && 2 * eps < t2 - t1)) throw precondition_error("regularity_ledger: eps must be below half the window");
    // all multi-indices up to alpha_max, grouped by order
    std::vector<std::vector<std::array<int, 3>>> alphas(std::size_t(alpha_max) + 1);
    for (int a = 0; a <= alpha_max; ++a)
        for (int b = 0; a + b <= alpha_max; ++b)
            for (int c = 0; a + b + c <= alpha_max; ++c) alphas[std::size_t(a + b + c)].push_back({a, b, c});
    auto dmax = [&](const ScalarField& f, const std::array<int, 3>& al) {
        const ScalarField d = detail::derivative(f, al);
        double mx = 0;
        for (int k = box.k0; k < box.k1; ++k)
            for (int j = box.j0; j < box.j1; ++j)
                for (int i = box.i0; i < box.i1; ++i) mx = std::max(mx, std::abs(d(i, j, k)));
        return mx;
    };
    RegularityLedger L;
    L.p_l4.assign(std::size_t(alpha_max) + 1, 0.0);
    L.dtu_l4.assign(std::size_t(alpha_max) + 1, 0.0);
    for (std::size_t n = 1; n < tr.u.size(); ++n) {
        const double t = tr.times[n];
        if (t <= t1 + eps || t >= t2 - eps) continue;
        const double dt = t - tr.times[n - 1];
        ScalarField pn(g);
        for (std::size_t c = 0; c < g.cells(); ++c) pn.data[c] = p.field[n].data[c] + p.offset[n];
        const auto du = to_centers((1.0 / dt) * (tr.u[n] - tr.u[n - 1]));
        for (int o = 0; o <= alpha_max; ++o) {
            RegularityRow row{t, o, 0, 0};
            for (const auto& al : alphas[std::size_t(o)]) {
                row.p = std::max(row.p, dmax(pn, al));
                for (int c = 0; c < 3; ++c) row.dtu = std::max(row.dtu, dmax(du[std::size_t(c)], al));
            }
            L.p_l4[std::size_t(o)] += dt * std::pow(row.p, 4);
            L.dtu_l4[std::size_t(o)] += dt * std::pow(row.dtu, 4);
            L.rows.push_back(row);
        }
    }
    for (auto* v : {&L.p_l4, &L.dtu_l4})
        for (double& x : *v) x = std::pow(x, 0.25);
    return L;
}

}  // namespace slipns
