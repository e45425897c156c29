// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <utility>

#include "calculus.hpp"
#include "linalg.hpp"

namespace slipns {

/**
 * @brief Matrix of the slip Stokes form over tangential unknowns.
 *
 * phi^T K v = sum 2 nu (grad v)_s : (grad phi)_s dV + wall term, where the wall term
 * is kappa * u0 * phi0 per wall cell (slip ghost closure, see robin_kappa).
 * Rows are covectors: quadrature weights are folded in.
 */
inline SpMat stokes_matrix(const Grid& g, const BoundaryData& bd) {
    bd.validate();
    const TangentialDofs d(g);
    const double V = g.cell_volume();
    Triplets t;
    t.reserve(g.cells() * 120);
    auto add_row = [&](const std::array<std::pair<long, double>, 4>& row, int n, double weight) {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) t.emplace_back(int(row[a].first), int(row[b].first), weight * row[a].second * row[b].second);
    };
    const double nu = bd.nu;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                add_row({{{long(d.u(i + 1, j, k)), 1 / g.hx}, {long(d.u(i, j, k)), -1 / g.hx}}}, 2, 2 * nu * V);
                add_row({{{long(d.v(i, j + 1, k)), 1 / g.hy}, {long(d.v(i, j, k)), -1 / g.hy}}}, 2, 2 * nu * V);
                if (k > 0 && k + 1 < g.nz)
                    add_row({{{long(d.w(i, j, k + 1)), 1 / g.hz}, {long(d.w(i, j, k)), -1 / g.hz}}}, 2, 2 * nu * V);
                else if (k + 1 < g.nz)
                    add_row({{{long(d.w(i, j, k + 1)), 1 / g.hz}}}, 1, 2 * nu * V);
                else if (k > 0)
                    add_row({{{long(d.w(i, j, k)), -1 / g.hz}}}, 1, 2 * nu * V);
                // xy shear on the z-edge at (xf(i), yf(j), zc(k))
                add_row({{{long(d.u(i, j, k)), 1 / g.hy}, {long(d.u(i, j - 1, k)), -1 / g.hy},
                          {long(d.v(i, j, k)), 1 / g.hx}, {long(d.v(i - 1, j, k)), -1 / g.hx}}}, 4, nu * V);
                if (k > 0) {
                    add_row({{{long(d.u(i, j, k)), 1 / g.hz}, {long(d.u(i, j, k - 1)), -1 / g.hz},
                              {long(d.w(i, j, k)), 1 / g.hx}, {long(d.w(i - 1, j, k)), -1 / g.hx}}}, 4, nu * V);
                    add_row({{{long(d.v(i, j, k)), 1 / g.hz}, {long(d.v(i, j, k - 1)), -1 / g.hz},
                              {long(d.w(i, j, k)), 1 / g.hy}, {long(d.w(i, j - 1, k)), -1 / g.hy}}}, 4, nu * V);
                }
            }
    const double kap = robin_kappa(g, bd) * g.hx * g.hy;
    if (kap > 0)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                for (int k : {0, g.nz - 1}) {
                    t.emplace_back(int(d.u(i, j, k)), int(d.u(i, j, k)), kap);
                    t.emplace_back(int(d.v(i, j, k)), int(d.v(i, j, k)), kap);
                }
    SpMat K(Eigen::Index(d.size()), Eigen::Index(d.size()));
    K.setFromTriplets(t.begin(), t.end());
    return K;
}

/// Face mass matrix over tangential unknowns (uniform cell volume).
inline SpMat mass_matrix(const Grid& g) {
    const TangentialDofs d(g);
    SpMat M(Eigen::Index(d.size()), Eigen::Index(d.size()));
    M.setIdentity();
    M *= g.cell_volume();
    return M;
}

/// Covector matrix of the skew convection form with advecting field a.
inline SpMat convection_matrix(const VectorField& a) {
    const Grid& g = a.grid;
    const std::size_t N = g.cells(), layer = std::size_t(g.nx) * g.ny;
    const double V = g.cell_volume();
    auto index = [&](int c, std::size_t f) -> long {
        if (c == 0) return long(f);
        if (c == 1) return long(N + f);
        if (f < layer || f >= layer * g.nz) return -1;
        return long(2 * N + f - layer);
    };
    Triplets t;
    t.reserve(N * 18);
    detail::convection_stencil(a, [&](int c, std::size_t f, std::size_t nb, double coef, int sgn) {
        const long r = index(c, f), col = index(c, nb);
        if (r >= 0 && col >= 0) t.emplace_back(int(r), int(col), sgn * coef * V);
    });
    const TangentialDofs d(g);
    SpMat C(Eigen::Index(d.size()), Eigen::Index(d.size()));
    C.setFromTriplets(t.begin(), t.end());
    return C;
}

}  // namespace slipns
