// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "operators.hpp"
#include "solver.hpp"
#include "spaces.hpp"

namespace slipns {

/// Cells whose centres lie in the middle half of the channel height, all x and y.
inline CellBox interior_box(const Grid& g) {
    int k0 = 0, k1 = g.nz;
    while (k0 < g.nz && g.zc(k0) < 0.25 * g.H) ++k0;
    while (k1 > 0 && g.zc(k1 - 1) > 0.75 * g.H) --k1;
    return {0, g.nx, 0, g.ny, std::max(k0, 2), std::min(k1, g.nz - 2)};
}

/**
 * @brief F(t_n) = embed(u^n - u^0) + sum_m dt [A u^{m+1} + B_m u^{m+1} - embed f^{m+1}].
 *
 * B_m is the convection frozen at u^m, as in the time stepper. Needs every step stored.
 */
inline Functional assemble_F(const SlipStokesOperator& A, const WeakSolutionTrajectory& tr, std::size_t n) {
    if (n >= tr.u.size()) throw precondition_error("assemble_F: step index out of range");
    const Grid& g = tr.grid;
    const TangentialDofs d(g);
    const double V = g.cell_volume();
    Vec F = V * (d.pack(tr.u[n]) - d.pack(tr.u[0]));
    for (std::size_t m = 0; m < n; ++m) {
        const double dt = tr.times[m + 1] - tr.times[m];
        const Vec um1 = d.pack(tr.u[m + 1]);
        F += dt * (A.matrix() * um1 + convection_matrix(tr.u[m]) * um1 - V * d.pack(tr.forcing(g, tr.times[m + 1])));
    }
    return Functional(g, F);
}

/// Largest |F(phi)| / ||phi||_{1,2} over the samples, not normalised by F.
inline double annihilator_pairing(const MetricContext& ctx, const Functional& F, const std::vector<VectorField>& samples) {
    double w = 0;
    for (const auto& s : samples) w = std::max(w, std::abs(pairing(F, s)) / ctx.metric_norm(s));
    return w;
}

enum Component { P1 = 0, P21 = 1, P22 = 2, P23 = 3 };
inline constexpr std::array<const char*, 4> component_names{"p1", "p21", "p22", "p23"};

struct DecompositionEntry {
    double t = 0;
    std::array<ScalarField, 4> p;
    std::array<double, 4> mean{};      ///< Omega0 means after normalisation
    std::array<double, 4> l2{};        ///< ||p_c||_2
    std::array<double, 4> constant{};  ///< ||p_c||_2 / neg_norm(source functional)
    std::array<double, 4> residual{};  ///< representation residuals
};

/**
 * @brief The four pressure components at one stored step.
 *
 * Sources: u, A u, B(u, u) and -f, each sent through -E^{-1,2} and the annihilator
 * representation. With these signs p = d/dt p1 + p21 + p22 + p23 solves the momentum equation.
 */
inline DecompositionEntry decompose_pressure(const MetricContext& ctx, const SlipStokesOperator& A, const WeakSolutionTrajectory& tr,
                                             std::size_t n, const CellBox& omega0) {
    const Grid& g = tr.grid;
    const VectorField& u = tr.u.at(n);
    DecompositionEntry e;
    e.t = tr.times[n];
    const std::array<Functional, 4> src{embed(u), apply_A(A, u), apply_B(u, u), -1.0 * embed(tr.forcing(g, e.t))};
    for (int c = 0; c < 4; ++c) {
        const Functional F = -1.0 * project_E_neg12(ctx, src[c]);
        Functional Fa = F;
        Fa.annihilator = true;
        const PressureRecovery r = pressure_from_functional(ctx, Fa, omega0);
        e.p[c] = r.p;
        e.mean[c] = box_mean(r.p, omega0);
        e.l2[c] = norm(r.p, 2.0);
        const double sn = neg_norm(ctx, src[c]);
        e.constant[c] = sn > 0 ? e.l2[c] / sn : 0.0;
        e.residual[c] = r.residual;
    }
    return e;
}

struct PressureDecomposition {
    CellBox omega0;
    std::vector<DecompositionEntry> entries;

    struct Ledger {
        double sup_p1 = 0;       ///< max_t ||p1||_2
        double sum_p21_sq = 0;   ///< sum dt ||p21||_2^2
        double sum_p22_43 = 0;   ///< sum dt ||p22||_2^{4/3}
        double sum_p23_sq = 0;   ///< sum dt ||p23||_2^2
        [[nodiscard]] bool finite() const {
            return std::isfinite(sup_p1) && std::isfinite(sum_p21_sq) && std::isfinite(sum_p22_43) && std::isfinite(sum_p23_sq);
        }
    };

    /// Time-integrability ledger with the exponents of the pressure bounds, as finite sums.
    [[nodiscard]] Ledger ledger() const {
        Ledger l;
        for (std::size_t n = 0; n < entries.size(); ++n) {
            const auto& e = entries[n];
            l.sup_p1 = std::max(l.sup_p1, e.l2[P1]);
            if (n == 0) continue;
            const double dt = e.t - entries[n - 1].t;
            l.sum_p21_sq += dt * e.l2[P21] * e.l2[P21];
            l.sum_p22_43 += dt * std::pow(e.l2[P22], 4.0 / 3.0);
            l.sum_p23_sq += dt * e.l2[P23] * e.l2[P23];
        }
        return l;
    }
};

inline PressureDecomposition decompose_trajectory(const MetricContext& ctx, const SlipStokesOperator& A, const WeakSolutionTrajectory& tr,
                                                  const CellBox& omega0) {
    PressureDecomposition d;
    d.omega0 = omega0;
    for (std::size_t n = 0; n < tr.u.size(); ++n) d.entries.push_back(decompose_pressure(ctx, A, tr, n, omega0));
    return d;
}

/// Pressure series; the spatially constant gauge G(t) is kept apart from the fields.
struct PressureTrajectory {
    std::vector<double> times;
    std::vector<ScalarField> field;
    std::vector<double> offset;

    /// Value at a cell including the gauge offset.
    [[nodiscard]] double at(std::size_t n, int i, int j, int k) const { return field[n](i, j, k) + offset[n]; }
};

/// p = d/dt p1 + p21 + p22 + p23; central differences inside, one-sided at the ends.
inline PressureTrajectory assemble_pressure(const PressureDecomposition& d) {
    const auto& E = d.entries;
    if (E.size() < 2) throw precondition_error("assemble_pressure needs at least two decomposition entries");
    PressureTrajectory p;
    const std::size_t N = E.size();
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t a = n == 0 ? 0 : n - 1, b = n + 1 == N ? n : n + 1;
        const double dt = E[b].t - E[a].t;
        ScalarField s = E[n].p[P21];
        for (std::size_t c = 0; c < s.data.size(); ++c)
            s.data[c] += E[n].p[P22].data[c] + E[n].p[P23].data[c] + (E[b].p[P1].data[c] - E[a].p[P1].data[c]) / dt;
        p.times.push_back(E[n].t);
        p.field.push_back(std::move(s));
        p.offset.push_back(0.0);
    }
    return p;
}

/// Adds the spatially constant signal G(t) at every step.
inline PressureTrajectory gauge_shift(PressureTrajectory p, const std::function<double(double)>& G) {
    for (std::size_t n = 0; n < p.times.size(); ++n) p.offset[n] += G(p.times[n]);
    return p;
}

/// Omega0-mean of the pressure at every step, gauge offset included.
inline std::vector<double> mean_ledger(const PressureTrajectory& p, const CellBox& omega0) {
    std::vector<double> m;
    for (std::size_t n = 0; n < p.times.size(); ++n) m.push_back(box_mean(p.field[n], omega0) + p.offset[n]);
    return m;
}

/// Pressure gradient at step n; spatial constants (the gauge offset) have no gradient.
inline VectorField pressure_gradient(const PressureTrajectory& p, std::size_t n) { return gradient(p.field.at(n)); }

/**
 * @brief Momentum residual (u^n - u^{n-1})/dt + u.grad u + A u / V + grad p - f on faces of the region.
 *
 * Returns the largest face value; n >= 1.
 */
inline double momentum_residual(const SlipStokesOperator& A, const WeakSolutionTrajectory& tr, const PressureTrajectory& p,
                                 std::size_t n, const CellBox& region) {
    if (n == 0 || n >= tr.u.size()) throw precondition_error("momentum_residual: step index out of range");
    const Grid& g = tr.grid;
    const TangentialDofs d(g);
    const double V = g.cell_volume(), dt = tr.times[n] - tr.times[n - 1];
    const VectorField& u = tr.u[n];
    VectorField r = (1.0 / dt) * (u - tr.u[n - 1]);
    r += convection_skew(u, u);
    r += d.unpack(A.matrix() * d.pack(u) / V);
    r += pressure_gradient(p, n);
    r -= tr.forcing(g, tr.times[n]);
    double m = 0;
    for (int k = region.k0; k < region.k1; ++k)
        for (int j = region.j0; j < region.j1; ++j)
            for (int i = region.i0; i < region.i1; ++i) {
                m = std::max({m, std::abs(r.u[g.c(i, j, k)]), std::abs(r.v[g.c(i, j, k)])});
                if (k > region.k0) m = std::max(m, std::abs(r.w[g.wf(i, j, k)]));
            }
    return m;
}

/// Largest |wide-stencil Laplacian| of p over the region (spacing 2h in each direction).
/// The compact stencil is tied to the discrete construction; the wide one measures smoothness.
inline double harmonicity_defect(const ScalarField& p, const CellBox& region) {
    const Grid& g = p.grid;
    double m = 0;
    for (int k = std::max(region.k0, 2); k < std::min(region.k1, g.nz - 2); ++k)
        for (int j = region.j0; j < region.j1; ++j)
            for (int i = region.i0; i < region.i1; ++i) {
                const double c = 2 * p(i, j, k);
                double l = (p(i + 2, j, k) - c + p(i - 2, j, k)) / (4 * g.hx * g.hx) + (p(i, j, k + 2) - c + p(i, j, k - 2)) / (4 * g.hz * g.hz);
                if (g.ny >= 8) l += (p(i, j + 2, k) - c + p(i, j - 2, k)) / (4 * g.hy * g.hy);
                else l += (p(i, j + 1, k) - c + p(i, j - 1, k)) / (g.hy * g.hy);
                m = std::max(m, std::abs(l));
            }
    return m;
}

/// Tangential space-time test field phi(x, t) = theta(t) Phi(x), theta compactly supported in (0, T).
struct TangentialTest {
    VectorField phi;
    std::function<double(double)> theta, dtheta;
};

struct IdentityDefect {
    double defect = 0;
    double scale = 0;
    double p2_term = 0;  ///< -sum dt theta int p2 div Phi, as it enters the defect
    [[nodiscard]] double relative() const { return scale > 0 ? std::abs(defect) / scale : std::abs(defect); }
};

/**
 * @brief Both sides of the integral identity with pressure for tangential, not necessarily solenoidal, test fields:
 * int [-u.phi_t + <A u, phi> + u.grad u.phi - f.phi] + int p1 div phi_t - int p2 div phi = 0.
 */
inline IdentityDefect verify_integral_identity(const SlipStokesOperator& A, const WeakSolutionTrajectory& tr, const PressureDecomposition& d,
                                               const TangentialTest& t, bool negate_p2 = false) {
    require_tangential(t.phi, "verify_integral_identity");
    if (d.entries.size() != tr.u.size()) throw precondition_error("decomposition and trajectory lengths differ");
    const Grid& g = tr.grid;
    const ScalarField divphi = divergence(t.phi);
    auto idiv = [&](const ScalarField& p) {
        double s = 0;
        for (std::size_t c = 0; c < p.data.size(); ++c) s += p.data[c] * divphi.data[c];
        return s * g.cell_volume();
    };
    IdentityDefect r;
    double parts[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t n = 1; n < tr.u.size(); ++n) {
        const double dt = tr.times[n] - tr.times[n - 1], tn = tr.times[n];
        const VectorField& u = tr.u[n];
        const auto& e = d.entries[n];
        const double th = t.theta(tn), dth = t.dtheta(tn);
        parts[0] -= dt * dth * dot(u, t.phi);
        parts[1] += dt * th * A.form(u, t.phi);
        parts[2] += dt * th * pairing(apply_B(u, u), t.phi);
        parts[3] -= dt * th * dot(tr.forcing(g, tn), t.phi);
        parts[4] += dt * dth * idiv(e.p[P1]);
        const double p2 = idiv(e.p[P21]) + idiv(e.p[P22]) + idiv(e.p[P23]);
        parts[5] -= dt * th * (negate_p2 ? -p2 : p2);
    }
    for (double p : parts) {
        r.defect += p;
        r.scale += std::abs(p);
    }
    r.p2_term = parts[5];
    return r;
}

struct PoissonPressure {
    ScalarField p;
    double compat = 0;  ///< mean of the source removed before the solve
};

/**
 * @brief Pressure from the divergence of the momentum equation: Lap p = -grad u : (grad u)^T + div f.
 *
 * Wall data come from the normal momentum component: dp/dz = -/+ gamma (du/dx + dv/dy) + f_z
 * on the bottom/top walls. Returned with zero Omega0 mean.
 */
inline PoissonPressure pressure_poisson(const PoissonSolver& ps, const VectorField& u, const BoundaryData& bd, const CellBox& omega0,
                                        const VectorField* f = nullptr) {
    const Grid& g = u.grid;
    const TensorField T = gradient(u);
    ScalarField rhs(g);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        double s = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s += T(a, b)[c] * T(b, a)[c];
        rhs.data[c] = -s;
    }
    if (f) {
        const ScalarField df = divergence(*f);
        for (std::size_t c = 0; c < g.cells(); ++c) rhs.data[c] += df.data[c];
    }
    // Neumann data enter the wall cells as a flux source.
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            for (const auto wall : {Wall::bottom, Wall::top}) {
                const int k = wall == Wall::bottom ? 0 : g.nz - 1;
                const double divt = (u.u[g.c(i + 1, j, k)] - u.u[g.c(i, j, k)]) / g.hx + (u.v[g.c(i, j + 1, k)] - u.v[g.c(i, j, k)]) / g.hy;
                const double fz = f ? f->w[g.wf(i, j, wall == Wall::bottom ? 0 : g.nz)] : 0.0;
                if (wall == Wall::bottom) rhs(i, j, k) += (-bd.gamma * divt + fz) / g.hz;
                else rhs(i, j, k) -= (bd.gamma * divt + fz) / g.hz;
            }
        }
    PoissonPressure r;
    r.p = ps.solve(rhs, &r.compat);
    const double m = box_mean(r.p, omega0);
    for (auto& x : r.p.data) x -= m;
    return r;
}

/// Largest difference of the two pressure gradients on the faces of a region.
inline double interior_gradient_difference(const ScalarField& p, const ScalarField& q, const CellBox& region) {
    const Grid& g = p.grid;
    const VectorField a = gradient(p), b = gradient(q);
    double m = 0;
    for (int k = region.k0; k < region.k1; ++k)
        for (int j = region.j0; j < region.j1; ++j)
            for (int i = region.i0; i < region.i1; ++i) {
                m = std::max({m, std::abs(a.u[g.c(i, j, k)] - b.u[g.c(i, j, k)]), std::abs(a.v[g.c(i, j, k)] - b.v[g.c(i, j, k)])});
                if (k > region.k0) m = std::max(m, std::abs(a.w[g.wf(i, j, k)] - b.w[g.wf(i, j, k)]));
            }
    return m;
}

}  // namespace slipns
