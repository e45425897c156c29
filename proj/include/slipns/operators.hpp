// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "forms.hpp"
#include "linalg.hpp"
#include "rational.hpp"
#include "spaces.hpp"

namespace slipns {

/// The slip Stokes form <A v, phi> = int 2 nu (grad v)_s : (grad phi)_s + gamma int_wall v . phi, assembled once.
class SlipStokesOperator {
public:
    SlipStokesOperator(const Grid& g, const BoundaryData& bd) : g_(g), bd_(bd), dofs_(g), K_(stokes_matrix(g, bd)) {}

    [[nodiscard]] const Grid& grid() const { return g_; }
    [[nodiscard]] const BoundaryData& boundary() const { return bd_; }
    [[nodiscard]] const TangentialDofs& dofs() const { return dofs_; }
    [[nodiscard]] const SpMat& matrix() const { return K_; }

    [[nodiscard]] double form(const VectorField& v, const VectorField& phi) const {
        return dofs_.pack(phi).dot(K_ * dofs_.pack(v));
    }

private:
    Grid g_;
    BoundaryData bd_;
    TangentialDofs dofs_;
    SpMat K_;
};

inline void require_tangential(const VectorField& v, const char* who) {
    if (!v.is_tangential()) throw precondition_error(std::string(who) + " needs a tangential field");
}

inline void require_solenoidal(const VectorField& v, const Tolerances& tol, const char* who) {
    require_tangential(v, who);
    const double scale = std::max(1.0, norm(v, q_infinity)) / v.grid.hmin();
    if (norm(divergence(v), q_infinity) > tol.div * scale) throw precondition_error(std::string(who) + " needs a solenoidal field");
}

inline Functional apply_A(const SlipStokesOperator& A, const VectorField& v) {
    require_tangential(v, "apply_A");
    return Functional(A.grid(), A.matrix() * A.dofs().pack(v));
}

/// Skew convection covector; pairing(apply_B(v, w), w) = 0 for solenoidal tangential v.
inline Functional apply_B(const VectorField& v, const VectorField& w) {
    return Functional(v.grid, v.grid.cell_volume() * TangentialDofs(v.grid).pack(convection_skew(v, w)));
}

/// Factored (A + k I); k = 0 needs gamma > 0 since rigid translations are otherwise in the kernel.
class Resolvent {
public:
    Resolvent(const SlipStokesOperator& A, double k) : A_(&A), k_(k) {
        if (k < 0) throw precondition_error("resolvent parameter must be non-negative");
        if (k == 0 && A.boundary().gamma == 0) throw precondition_error("resolvent at k = 0 needs gamma > 0");
        solver_.factor(A.matrix() + k * mass_matrix(A.grid()));
    }
    [[nodiscard]] VectorField solve(const Functional& g) const { return A_->dofs().unpack(solver_.solve(g.cov)); }
    [[nodiscard]] double k() const { return k_; }

private:
    const SlipStokesOperator* A_;
    double k_;
    SpdSolver solver_;
};

inline VectorField resolvent(const SlipStokesOperator& A, const Functional& g, double k) { return Resolvent(A, k).solve(g); }
inline VectorField resolvent(const SlipStokesOperator& A, const VectorField& g, double k) { return resolvent(A, embed(g), k); }

/**
 * @brief Solves (alpha V I + beta K) w + D^T lambda = b, D w = 0 over tangential unknowns.
 *
 * Schur-complement CG on lambda; the velocity block is factored once.
 */
class ProjectedSolver {
public:
    ProjectedSolver(const MetricContext& ctx, const SlipStokesOperator& A, double alpha, double beta)
        : ctx_(&ctx), alpha_(alpha), visc_(beta * A.boundary().nu) {
        if (alpha <= 0 || beta < 0) throw precondition_error("projected solve needs alpha > 0, beta >= 0");
        B_.factor(alpha * mass_matrix(A.grid()) + beta * A.matrix());
    }

    [[nodiscard]] Vec solve(const Vec& b, IterStats* st = nullptr) const {
        auto Binv = [&](const Vec& x) { return B_.solve(x); };
        const Vec y = B_.solve(b);
        const Vec lam = ctx_->schur_solve(Binv, ctx_->D() * y, alpha_, visc_, st);
        return B_.solve(b - ctx_->Dt() * lam);
    }

private:
    const MetricContext* ctx_;
    double alpha_, visc_;
    SpdSolver B_;
};

/// J^(k) = (I + A/k)^{-1} on solenoidal tangential fields.
class Yosida {
public:
    Yosida(const MetricContext& ctx, const SlipStokesOperator& A, double k)
        : ctx_(&ctx), k_(k), solver_(ctx, A, 1.0, check(k)) {}

    [[nodiscard]] VectorField apply(const VectorField& v) const {
        require_solenoidal(v, ctx_->tol(), "yosida");
        const double V = v.grid.cell_volume();
        return ctx_->dofs().unpack(solver_.solve(V * ctx_->dofs().pack(v)));
    }
    [[nodiscard]] double k() const { return k_; }

private:
    static double check(double k) {
        if (!(k > 0)) throw precondition_error("yosida parameter must be positive");
        return 1.0 / k;
    }
    const MetricContext* ctx_;
    double k_;
    ProjectedSolver solver_;
};

inline VectorField yosida(const MetricContext& ctx, const SlipStokesOperator& A, const VectorField& v, double k) {
    return Yosida(ctx, A, k).apply(v);
}

/// ||u||_q + ||grad u||_q + ||Lap u||_q with the componentwise slip Laplacian.
inline double w2q_norm(const VectorField& u, double q, const BoundaryData& bd) {
    return norm(u, q) + grad_norm(u, q) + norm(laplacian(u, bd), q);
}

struct StokesEvolutionResult {
    std::vector<double> times;
    std::vector<VectorField> velocity;
    std::vector<ScalarField> pressure;  ///< pressure[n] pairs with velocity[n + 1]
    std::vector<double> dtu_norm, u2q_norm, pi1q_norm, g_norm;
    double max_divergence = 0;

    /// Left side of the maximal-regularity estimate divided by its right side, as time sums.
    [[nodiscard]] double estimate_ratio(double r, double u0_norm) const {
        double lhs = 0, rhs = std::pow(u0_norm, r);
        for (std::size_t n = 0; n < dtu_norm.size(); ++n) {
            const double dt = times[n + 1] - times[n];
            lhs += dt * (std::pow(dtu_norm[n], r) + std::pow(u2q_norm[n], r) + std::pow(pi1q_norm[n], r));
            rhs += dt * std::pow(g_norm[n], r);
        }
        return rhs > 0 ? lhs / rhs : 0.0;
    }
};

/**
 * @brief Implicit Euler for du/dt + A u = P g with u solenoidal tangential.
 *
 * Each step is one constrained solve; the pressure is the gradient part of the
 * momentum residual, recovered by a Helmholtz split. Norms use exponent q.
 */
inline StokesEvolutionResult unsteady_stokes(const MetricContext& ctx, const SlipStokesOperator& A,
                                             const std::function<VectorField(double)>& g, const VectorField& u0,
                                             double dt, double T, double q = 2.0) {
    if (!(dt > 0) || !(T >= 0)) throw precondition_error("unsteady_stokes needs dt > 0 and T >= 0");
    require_solenoidal(u0, ctx.tol(), "unsteady_stokes");
    const Grid& G = ctx.grid();
    const double V = G.cell_volume();
    const TangentialDofs& d = ctx.dofs();
    const ProjectedSolver solver(ctx, A, 1.0 / dt, 1.0);
    const int steps = int(std::llround(T / dt));

    StokesEvolutionResult res;
    res.times.push_back(0.0);
    res.velocity.push_back(u0);
    Vec un = d.pack(u0);
    for (int n = 0; n < steps; ++n) {
        const double t = (n + 1) * dt;
        const VectorField gn = g(t);
        const VectorField pg = helmholtz_project(ctx.poisson(), gn).sigma;
        const Vec b = (V / dt) * un + V * d.pack(pg);
        Vec u1;
        try {
            u1 = solver.solve(b);
        } catch (const solver_error& e) {
            throw solver_error("unsteady_stokes step " + std::to_string(n + 1) + ": " + e.what());
        }
        const VectorField uf = d.unpack(u1);
        // momentum residual of the unprojected forcing is a gradient: grad pi
        const Vec rcov = V * d.pack(gn) - (V / dt) * (u1 - un) - A.matrix() * u1;
        const ScalarField pi = helmholtz_project(ctx.poisson(), d.unpack(rcov / V)).psi;

        res.times.push_back(t);
        res.dtu_norm.push_back(norm(d.unpack((u1 - un) / dt), q));
        res.u2q_norm.push_back(w2q_norm(uf, q, A.boundary()));
        res.pi1q_norm.push_back(norm(pi, q, Space::W1q));
        res.g_norm.push_back(norm(gn, q));
        res.max_divergence = std::max(res.max_divergence, norm(divergence(uf), q_infinity));
        res.velocity.push_back(uf);
        res.pressure.push_back(pi);
        un = u1;
    }
    return res;
}

// Probes for the bounds whose constants the theory leaves unspecified.

/// <A v, v> / (nu ||grad v||^2).
inline double korn_ratio(const SlipStokesOperator& A, const VectorField& v) {
    const double gn = grad_norm(v, 2.0);
    return A.form(v, v) / (A.boundary().nu * gn * gn);
}

/// neg_norm(A v) / ||grad v||.
inline double a_bound_ratio(const MetricContext& ctx, const SlipStokesOperator& A, const VectorField& v) {
    return neg_norm(ctx, apply_A(A, v)) / grad_norm(v, 2.0);
}

/// neg_norm(B(v, w)) / (||v||^{1/2} ||grad v||^{1/2} ||grad w||).
inline double b_bound_ratio(const MetricContext& ctx, const VectorField& v, const VectorField& w) {
    const double den = std::sqrt(norm(v, 2.0) * grad_norm(v, 2.0)) * grad_norm(w, 2.0);
    return neg_norm(ctx, apply_B(v, w)) / den;
}

}  // namespace slipns
