// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "grid.hpp"

namespace slipns {

/// Gradient of a cell-centred scalar onto faces. Wall faces carry zero (homogeneous Neumann).
inline VectorField gradient(const ScalarField& p) {
    const Grid& g = p.grid;
    VectorField r(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                r.u[g.c(i, j, k)] = (p(i, j, k) - p(i - 1, j, k)) / g.hx;
                r.v[g.c(i, j, k)] = (p(i, j, k) - p(i, j - 1, k)) / g.hy;
            }
    for (int k = 1; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) r.w[g.wf(i, j, k)] = (p(i, j, k) - p(i, j, k - 1)) / g.hz;
    return r;
}

/// Divergence of a face field at cell centres (wall faces included).
inline ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid;
    ScalarField d(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                d(i, j, k) = (v.u[g.c(i + 1, j, k)] - v.u[g.c(i, j, k)]) / g.hx +
                             (v.v[g.c(i, j + 1, k)] - v.v[g.c(i, j, k)]) / g.hy +
                             (v.w[g.wf(i, j, k + 1)] - v.w[g.wf(i, j, k)]) / g.hz;
    return d;
}

/// Neumann Laplacian of a scalar; identical to divergence(gradient(p)).
inline ScalarField laplacian(const ScalarField& p) {
    const Grid& g = p.grid;
    ScalarField r(g);
    const double ix = 1.0 / (g.hx * g.hx), iy = 1.0 / (g.hy * g.hy), iz = 1.0 / (g.hz * g.hz);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = p(i, j, k);
                double s = (p(i + 1, j, k) - 2 * c + p(i - 1, j, k)) * ix + (p(i, j + 1, k) - 2 * c + p(i, j - 1, k)) * iy;
                if (k + 1 < g.nz) s += (p(i, j, k + 1) - c) * iz;
                if (k > 0) s -= (c - p(i, j, k - 1)) * iz;
                r(i, j, k) = s;
            }
    return r;
}

/// Wall transfer coefficient of the Robin ghost closure: tangential wall stress = kappa * (first interior value).
inline double robin_kappa(const Grid& g, const BoundaryData& bd) {
    return bd.gamma * bd.nu / (bd.nu + 0.5 * bd.gamma * g.hz);
}

/**
 * @brief Componentwise vector Laplacian with slip ghosts.
 *
 * Tangential components use the ghost value fixed by nu (u0 - ug)/hz = gamma (u0 + ug)/2.
 * The normal component uses the wall values of w as stored. Wall rows are left at zero.
 */
inline VectorField laplacian(const VectorField& v, const BoundaryData& bd) {
    const Grid& g = v.grid;
    VectorField r(g);
    const double ix = 1.0 / (g.hx * g.hx), iy = 1.0 / (g.hy * g.hy), iz = 1.0 / (g.hz * g.hz);
    const double kap = robin_kappa(g, bd) / bd.nu;
    auto tang = [&](const std::vector<double>& a, int i, int j, int k) {
        const double c = a[g.c(i, j, k)];
        double s = (a[g.c(i + 1, j, k)] - 2 * c + a[g.c(i - 1, j, k)]) * ix + (a[g.c(i, j + 1, k)] - 2 * c + a[g.c(i, j - 1, k)]) * iy;
        s += (k + 1 < g.nz) ? (a[g.c(i, j, k + 1)] - c) * iz : -kap * c / g.hz;
        s -= (k > 0) ? (c - a[g.c(i, j, k - 1)]) * iz : kap * c / g.hz;
        return s;
    };
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                r.u[g.c(i, j, k)] = tang(v.u, i, j, k);
                r.v[g.c(i, j, k)] = tang(v.v, i, j, k);
            }
    for (int k = 1; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = v.w[g.wf(i, j, k)];
                r.w[g.wf(i, j, k)] = (v.w[g.wf(i + 1, j, k)] - 2 * c + v.w[g.wf(i - 1, j, k)]) * ix +
                                     (v.w[g.wf(i, j + 1, k)] - 2 * c + v.w[g.wf(i, j - 1, k)]) * iy +
                                     (v.w[g.wf(i, j, k + 1)] - 2 * c + v.w[g.wf(i, j, k - 1)]) * iz;
            }
    return r;
}

enum class Wall { bottom, top };

/// Wall trace: u at (xf,yc), v at (xc,yf), w at (xc,yc), each nx*ny values.
struct SurfaceVector {
    Grid grid;
    Wall wall = Wall::bottom;
    std::vector<double> u, v, w;
};

/// Second-order extrapolation of tangential components to the wall; the normal part is read from the wall faces.
inline SurfaceVector trace(const VectorField& f, Wall wall) {
    const Grid& g = f.grid;
    SurfaceVector s{g, wall, {}, {}, {}};
    const std::size_t layer = std::size_t(g.nx) * g.ny;
    s.u.resize(layer); s.v.resize(layer); s.w.resize(layer);
    const int k0 = wall == Wall::bottom ? 0 : g.nz - 1;
    const int k1 = wall == Wall::bottom ? 1 : g.nz - 2;
    const int kw = wall == Wall::bottom ? 0 : g.nz;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t n = g.c(i, j, 0);
            s.u[n] = 1.5 * f.u[g.c(i, j, k0)] - 0.5 * f.u[g.c(i, j, k1)];
            s.v[n] = 1.5 * f.v[g.c(i, j, k0)] - 0.5 * f.v[g.c(i, j, k1)];
            s.w[n] = f.w[g.wf(i, j, kw)];
        }
    return s;
}

/// Trace consistent with the slip ghost closure: t = nu u0 / (nu + gamma hz / 2).
inline SurfaceVector robin_trace(const VectorField& f, Wall wall, const BoundaryData& bd) {
    const Grid& g = f.grid;
    SurfaceVector s{g, wall, {}, {}, {}};
    const std::size_t layer = std::size_t(g.nx) * g.ny;
    s.u.resize(layer); s.v.resize(layer); s.w.resize(layer);
    const int k0 = wall == Wall::bottom ? 0 : g.nz - 1;
    const double a = bd.nu / (bd.nu + 0.5 * bd.gamma * g.hz);
    for (std::size_t n = 0; n < layer; ++n) {
        s.u[n] = a * f.u[n + layer * k0];
        s.v[n] = a * f.v[n + layer * k0];
        s.w[n] = f.w[n + layer * (wall == Wall::bottom ? 0 : g.nz)];
    }
    return s;
}

/// Midpoint integral of a scalar over the channel.
inline double integrate(const ScalarField& p) {
    double s = 0;
    for (double x : p.data) s += x;
    return s * p.grid.cell_volume();
}

/// Surface integral of a pointwise function of the trace components over one wall.
inline double integrate(const SurfaceVector& s, const std::function<double(double, double, double)>& f) {
    double r = 0;
    for (std::size_t n = 0; n < s.u.size(); ++n) r += f(s.u[n], s.v[n], s.w[n]);
    return r * s.grid.hx * s.grid.hy;
}

/// Sum over both walls of the integral of |trace|^2.
inline double wall_integral_sq(const VectorField& f) {
    auto sq = [](double a, double b, double c) { return a * a + b * b + c * c; };
    return integrate(trace(f, Wall::bottom), sq) + integrate(trace(f, Wall::top), sq);
}

/// Face values averaged to cell centres, returned as three cell-centred scalars.
inline std::array<ScalarField, 3> to_centers(const VectorField& v) {
    const Grid& g = v.grid;
    std::array<ScalarField, 3> r{ScalarField(g), ScalarField(g), ScalarField(g)};
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                r[0](i, j, k) = 0.5 * (v.u[g.c(i, j, k)] + v.u[g.c(i + 1, j, k)]);
                r[1](i, j, k) = 0.5 * (v.v[g.c(i, j, k)] + v.v[g.c(i, j + 1, k)]);
                r[2](i, j, k) = 0.5 * (v.w[g.wf(i, j, k)] + v.w[g.wf(i, j, k + 1)]);
            }
    return r;
}

namespace detail {

/// Visit every first derivative d_b v_a at its natural staggered location with its quadrature weight.
/// Wall edges of tangential components use the extrapolated trace over a half cell.
template <class Visit>
void for_each_derivative(const VectorField& f, Visit&& visit) {
    const Grid& g = f.grid;
    const double V = g.cell_volume();
    const std::array<const std::vector<double>*, 2> tang{&f.u, &f.v};
    const auto tb = trace(f, Wall::bottom), tt = trace(f, Wall::top);
    for (int a = 0; a < 2; ++a) {
        const auto& q = *tang[a];
        const auto& tbq = a == 0 ? tb.u : tb.v;
        const auto& ttq = a == 0 ? tt.u : tt.v;
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const double c = q[g.c(i, j, k)];
                    visit(a, 0, (q[g.c(i + 1, j, k)] - c) / g.hx, V);
                    visit(a, 1, (q[g.c(i, j + 1, k)] - c) / g.hy, V);
                    if (k + 1 < g.nz) visit(a, 2, (q[g.c(i, j, k + 1)] - c) / g.hz, V);
                }
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t n = g.c(i, j, 0);
                visit(a, 2, (q[g.c(i, j, 0)] - tbq[n]) / (0.5 * g.hz), 0.5 * V);
                visit(a, 2, (ttq[n] - q[g.c(i, j, g.nz - 1)]) / (0.5 * g.hz), 0.5 * V);
            }
    }
    for (int k = 0; k <= g.nz; ++k) {
        const double wt = (k == 0 || k == g.nz) ? 0.5 * V : V;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = f.w[g.wf(i, j, k)];
                visit(2, 0, (f.w[g.wf(i + 1, j, k)] - c) / g.hx, wt);
                visit(2, 1, (f.w[g.wf(i, j + 1, k)] - c) / g.hy, wt);
                if (k < g.nz) visit(2, 2, (f.w[g.wf(i, j, k + 1)] - c) / g.hz, V);
            }
    }
}

}  // namespace detail

/// Velocity gradient averaged to cell centres: T(a,b) = d_b v_a.
inline TensorField gradient(const VectorField& f) {
    const Grid& g = f.grid;
    TensorField t(g);
    const auto tb = trace(f, Wall::bottom), tt = trace(f, Wall::top);
    const std::array<const std::vector<double>*, 2> tang{&f.u, &f.v};
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t n = g.c(i, j, k);
                for (int a = 0; a < 2; ++a) {
                    const auto& q = *tang[a];
                    // shifted index along the component's own staggering direction
                    auto at = [&](int di, int dj, int dk) { return q[g.c(i + di, j + dj, k + dk)]; };
                    const int si = a == 0 ? 1 : 0, sj = a == 1 ? 1 : 0;
                    t(a, a)[n] = (at(si, sj, 0) - at(0, 0, 0)) / (a == 0 ? g.hx : g.hy);
                    // transverse in-plane derivative: centred over two cells, averaged over the two faces
                    const int oi = a == 1 ? 1 : 0, oj = a == 0 ? 1 : 0;
                    const double hpl = a == 0 ? g.hy : g.hx;
                    t(a, a == 0 ? 1 : 0)[n] = 0.25 * ((at(oi, oj, 0) - at(-oi, -oj, 0)) + (at(si + oi, sj + oj, 0) - at(si - oi, sj - oj, 0))) / hpl;
                    auto zval = [&](int di, int dj, int kk) {
                        if (kk < 0) return (a == 0 ? tb.u : tb.v)[g.c(i + di, j + dj, 0)];
                        if (kk >= g.nz) return (a == 0 ? tt.u : tt.v)[g.c(i + di, j + dj, 0)];
                        return q[g.c(i + di, j + dj, kk)];
                    };
                    const double dzlo = (k == 0) ? 0.5 * g.hz : g.hz, dzhi = (k == g.nz - 1) ? 0.5 * g.hz : g.hz;
                    const double d0 = (zval(0, 0, k + 1) - zval(0, 0, k - 1)) / (dzlo + dzhi);
                    const double d1 = (zval(si, sj, k + 1) - zval(si, sj, k - 1)) / (dzlo + dzhi);
                    t(a, 2)[n] = 0.5 * (d0 + d1);
                }
                auto W = [&](int di, int dj, int kk) { return f.w[g.wf(i + di, j + dj, kk)]; };
                t(2, 2)[n] = (W(0, 0, k + 1) - W(0, 0, k)) / g.hz;
                t(2, 0)[n] = 0.25 * ((W(1, 0, k) - W(-1, 0, k)) + (W(1, 0, k + 1) - W(-1, 0, k + 1))) / g.hx;
                t(2, 1)[n] = 0.25 * ((W(0, 1, k) - W(0, -1, k)) + (W(0, 1, k + 1) - W(0, -1, k + 1))) / g.hy;
            }
    return t;
}

/// Symmetric part of the velocity gradient at cell centres.
inline TensorField sym_gradient(const VectorField& f) {
    TensorField t = gradient(f), s(f.grid);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (std::size_t n = 0; n < f.grid.cells(); ++n) s(a, b)[n] = 0.5 * (t(a, b)[n] + t(b, a)[n]);
    return s;
}

namespace detail {

/// Visit the six neighbour couplings of every tangential face under advecting velocity a.
/// visit(comp, face, neighbour_comp_array, neighbour_index, coefficient) with coefficient = a_mid / (2h) and sign +1 / -1.
template <class Visit>
void convection_stencil(const VectorField& a, Visit&& visit) {
    const Grid& g = a.grid;
    const double hx2 = 2 * g.hx, hy2 = 2 * g.hy, hz2 = 2 * g.hz;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t f = g.c(i, j, k);
                // u-face
                visit(0, f, g.c(i + 1, j, k), 0.5 * (a.u[g.c(i, j, k)] + a.u[g.c(i + 1, j, k)]) / hx2, +1);
                visit(0, f, g.c(i - 1, j, k), 0.5 * (a.u[g.c(i - 1, j, k)] + a.u[g.c(i, j, k)]) / hx2, -1);
                visit(0, f, g.c(i, j + 1, k), 0.5 * (a.v[g.c(i - 1, j + 1, k)] + a.v[g.c(i, j + 1, k)]) / hy2, +1);
                visit(0, f, g.c(i, j - 1, k), 0.5 * (a.v[g.c(i - 1, j, k)] + a.v[g.c(i, j, k)]) / hy2, -1);
                if (k + 1 < g.nz) visit(0, f, g.c(i, j, k + 1), 0.5 * (a.w[g.wf(i - 1, j, k + 1)] + a.w[g.wf(i, j, k + 1)]) / hz2, +1);
                if (k > 0) visit(0, f, g.c(i, j, k - 1), 0.5 * (a.w[g.wf(i - 1, j, k)] + a.w[g.wf(i, j, k)]) / hz2, -1);
                // v-face
                visit(1, f, g.c(i + 1, j, k), 0.5 * (a.u[g.c(i + 1, j - 1, k)] + a.u[g.c(i + 1, j, k)]) / hx2, +1);
                visit(1, f, g.c(i - 1, j, k), 0.5 * (a.u[g.c(i, j - 1, k)] + a.u[g.c(i, j, k)]) / hx2, -1);
                visit(1, f, g.c(i, j + 1, k), 0.5 * (a.v[g.c(i, j, k)] + a.v[g.c(i, j + 1, k)]) / hy2, +1);
                visit(1, f, g.c(i, j - 1, k), 0.5 * (a.v[g.c(i, j - 1, k)] + a.v[g.c(i, j, k)]) / hy2, -1);
                if (k + 1 < g.nz) visit(1, f, g.c(i, j, k + 1), 0.5 * (a.w[g.wf(i, j - 1, k + 1)] + a.w[g.wf(i, j, k + 1)]) / hz2, +1);
                if (k > 0) visit(1, f, g.c(i, j, k - 1), 0.5 * (a.w[g.wf(i, j - 1, k)] + a.w[g.wf(i, j, k)]) / hz2, -1);
            }
    for (int k = 1; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t f = g.wf(i, j, k);
                visit(2, f, g.wf(i + 1, j, k), 0.5 * (a.u[g.c(i + 1, j, k - 1)] + a.u[g.c(i + 1, j, k)]) / hx2, +1);
                visit(2, f, g.wf(i - 1, j, k), 0.5 * (a.u[g.c(i, j, k - 1)] + a.u[g.c(i, j, k)]) / hx2, -1);
                visit(2, f, g.wf(i, j + 1, k), 0.5 * (a.v[g.c(i, j + 1, k - 1)] + a.v[g.c(i, j + 1, k)]) / hy2, +1);
                visit(2, f, g.wf(i, j - 1, k), 0.5 * (a.v[g.c(i, j, k - 1)] + a.v[g.c(i, j, k)]) / hy2, -1);
                visit(2, f, g.wf(i, j, k + 1), 0.5 * (a.w[g.wf(i, j, k)] + a.w[g.wf(i, j, k + 1)]) / hz2, +1);
                visit(2, f, g.wf(i, j, k - 1), 0.5 * (a.w[g.wf(i, j, k - 1)] + a.w[g.wf(i, j, k)]) / hz2, -1);
            }
}

inline std::vector<double>& comp(VectorField& v, int c) { return c == 0 ? v.u : (c == 1 ? v.v : v.w); }
inline const std::vector<double>& comp(const VectorField& v, int c) { return c == 0 ? v.u : (c == 1 ? v.v : v.w); }

}  // namespace detail

/// Advective derivative a . grad w at the faces (centred, midpoint advecting velocities).
inline VectorField advection(const VectorField& a, const VectorField& w) {
    VectorField r(a.grid);
    detail::convection_stencil(a, [&](int c, std::size_t f, std::size_t nb, double coef, int sgn) {
        const auto& q = detail::comp(w, c);
        detail::comp(r, c)[f] += sgn > 0 ? coef * (q[nb] - q[f]) : coef * (q[f] - q[nb]);
    });
    return r;
}

/// Skew-symmetric convection (a . grad w + div(a (x) w)) / 2; pairs to zero with w for every a.
inline VectorField convection_skew(const VectorField& a, const VectorField& w) {
    VectorField r(a.grid);
    detail::convection_stencil(a, [&](int c, std::size_t f, std::size_t nb, double coef, int sgn) {
        detail::comp(r, c)[f] += sgn * coef * detail::comp(w, c)[nb];
    });
    return r;
}

/// Curl of an edge-sampled potential A: A_x at (xc,yf,zf), A_y at (xf,yc,zf), A_z at (xf,yf,zc).
/// The result is tangential when A_x and A_y vanish on the walls.
template <class F>
VectorField curl_of_potential(const Grid& g, F&& A) {
    VectorField r(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xf(i), y = g.yc(j), z = g.zc(k);
                r.u[g.c(i, j, k)] = (A(x, y + 0.5 * g.hy, z)[2] - A(x, y - 0.5 * g.hy, z)[2]) / g.hy -
                                    (A(x, y, z + 0.5 * g.hz)[1] - A(x, y, z - 0.5 * g.hz)[1]) / g.hz;
                const double xv = g.xc(i), yv = g.yf(j);
                r.v[g.c(i, j, k)] = (A(xv, yv, z + 0.5 * g.hz)[0] - A(xv, yv, z - 0.5 * g.hz)[0]) / g.hz -
                                    (A(xv + 0.5 * g.hx, yv, z)[2] - A(xv - 0.5 * g.hx, yv, z)[2]) / g.hx;
            }
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xc(i), y = g.yc(j), z = g.zf(k);
                r.w[g.wf(i, j, k)] = (A(x + 0.5 * g.hx, y, z)[1] - A(x - 0.5 * g.hx, y, z)[1]) / g.hx -
                                     (A(x, y + 0.5 * g.hy, z)[0] - A(x, y - 0.5 * g.hy, z)[0]) / g.hy;
            }
    return r;
}

constexpr double q_infinity = std::numeric_limits<double>::infinity();

/// L^q norm of a scalar (q = infinity gives the maximum modulus).
inline double norm(const ScalarField& p, double q) {
    if (q < 1) throw precondition_error("norm exponent below 1");
    if (std::isinf(q)) {
        double m = 0;
        for (double x : p.data) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0;
    for (double x : p.data) s += std::pow(std::abs(x), q);
    return std::pow(s * p.grid.cell_volume(), 1.0 / q);
}

/// Squared L^2 norm of a face field using the face mass (wall faces weighted by one half).
inline double l2_squared(const VectorField& f) {
    const Grid& g = f.grid;
    double s = 0;
    for (std::size_t n = 0; n < f.u.size(); ++n) s += f.u[n] * f.u[n] + f.v[n] * f.v[n];
    const std::size_t layer = std::size_t(g.nx) * g.ny;
    for (std::size_t n = 0; n < f.w.size(); ++n) {
        const double wt = (n < layer || n >= layer * g.nz) ? 0.5 : 1.0;
        s += wt * f.w[n] * f.w[n];
    }
    return s * g.cell_volume();
}

/// L^2 inner product with the face mass.
inline double dot(const VectorField& a, const VectorField& b) {
    const Grid& g = a.grid;
    double s = 0;
    for (std::size_t n = 0; n < a.u.size(); ++n) s += a.u[n] * b.u[n] + a.v[n] * b.v[n];
    const std::size_t layer = std::size_t(g.nx) * g.ny;
    for (std::size_t n = 0; n < a.w.size(); ++n) {
        const double wt = (n < layer || n >= layer * g.nz) ? 0.5 : 1.0;
        s += wt * a.w[n] * b.w[n];
    }
    return s * g.cell_volume();
}

/// L^q norm of a vector field. q = 2 uses the face mass; other q use the Euclidean modulus at cell centres.
inline double norm(const VectorField& f, double q) {
    if (q < 1) throw precondition_error("norm exponent below 1");
    if (q == 2) return std::sqrt(l2_squared(f));
    const auto c = to_centers(f);
    const Grid& g = f.grid;
    double s = 0;
    for (std::size_t n = 0; n < g.cells(); ++n) {
        const double m = std::sqrt(c[0].data[n] * c[0].data[n] + c[1].data[n] * c[1].data[n] + c[2].data[n] * c[2].data[n]);
        s = std::isinf(q) ? std::max(s, m) : s + std::pow(m, q);
    }
    return std::isinf(q) ? s : std::pow(s * g.cell_volume(), 1.0 / q);
}

/// L^q norm of the full velocity gradient, each derivative taken at its staggered location.
inline double grad_norm(const VectorField& f, double q) {
    if (q < 1) throw precondition_error("norm exponent below 1");
    double s = 0;
    detail::for_each_derivative(f, [&](int, int, double d, double wt) {
        s = std::isinf(q) ? std::max(s, std::abs(d)) : s + wt * std::pow(std::abs(d), q);
    });
    return std::isinf(q) ? s : std::pow(s, 1.0 / q);
}

/// L^q norm of the scalar gradient on faces.
inline double grad_norm(const ScalarField& p, double q) {
    const VectorField gp = gradient(p);
    if (q < 1) throw precondition_error("norm exponent below 1");
    const Grid& g = p.grid;
    double s = 0;
    auto acc = [&](double d, double wt) { s = std::isinf(q) ? std::max(s, std::abs(d)) : s + wt * std::pow(std::abs(d), q); };
    const double V = g.cell_volume();
    for (std::size_t n = 0; n < gp.u.size(); ++n) { acc(gp.u[n], V); acc(gp.v[n], V); }
    for (std::size_t n = 0; n < gp.w.size(); ++n) acc(gp.w[n], V);
    return std::isinf(q) ? s : std::pow(s, 1.0 / q);
}

enum class Space { Lq, W1q };

/// Norm in L^q or W^{1,q}; the W^{1,q} norm is (||f||_q^q + ||grad f||_q^q)^(1/q), or the max of both for q = infinity.
template <class Field>
double norm(const Field& f, double q, Space space) {
    const double a = norm(f, q);
    if (space == Space::Lq) return a;
    const double b = grad_norm(f, q);
    if (std::isinf(q)) return std::max(a, b);
    return std::pow(std::pow(a, q) + std::pow(b, q), 1.0 / q);
}

}  // namespace slipns
