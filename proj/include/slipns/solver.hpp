// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "operators.hpp"
#include "random_fields.hpp"
#include "spaces.hpp"

namespace slipns {

/// Largest face speed times dt over the smallest spacing.
inline double cfl_number(const VectorField& u, double dt) {
    const Grid& g = u.grid;
    double m = 0;
    for (double x : u.u) m = std::max(m, std::abs(x) / g.hx);
    for (double x : u.v) m = std::max(m, std::abs(x) / g.hy);
    for (double x : u.w) m = std::max(m, std::abs(x) / g.hz);
    return m * dt;
}

/**
 * @brief One first-order IMEX step: implicit slip Stokes form, lagged skew convection, Helmholtz projection.
 *
 * The convection operator is frozen at u^n but applied to the new velocity; being skew it
 * drops out of the energy balance, so with f = 0 the kinetic energy cannot grow.
 */
class Stepper {
public:
    Stepper(const MetricContext& ctx, const BoundaryData& bd, double dt, double cfl = 0.5)
        : ctx_(&ctx), A_(ctx.grid(), bd), dt_(dt), cfl_(cfl) {
        if (!(dt > 0)) throw precondition_error("time step must be positive");
        if (!(cfl > 0)) throw precondition_error("CFL bound must be positive");
        B_ = (1.0 / dt) * mass_matrix(ctx.grid()) + A_.matrix();
        Binv_.factor(B_);
    }

    [[nodiscard]] const SlipStokesOperator& op() const { return A_; }
    [[nodiscard]] double dt() const { return dt_; }

    /// u^{n+1} from u^n and the forcing sampled at t^{n+1}.
    [[nodiscard]] VectorField step(const VectorField& un, const VectorField& f) const {
        const double c = cfl_number(un, dt_);
        if (c > cfl_) throw precondition_error("CFL guard: dt max|u| / h = " + std::to_string(c) + " exceeds " + std::to_string(cfl_));
        const Grid& g = ctx_->grid();
        const TangentialDofs& d = ctx_->dofs();
        const double V = g.cell_volume();
        const Vec rhs = (V / dt_) * d.pack(un) + V * d.pack(f);
        Vec x = Binv_.solve(rhs);
        bool moving = false;
        for (double a : un.u) moving = moving || a != 0;
        for (double a : un.v) moving = moving || a != 0;
        for (double a : un.w) moving = moving || a != 0;
        if (moving) {
            const SpMat C = convection_matrix(un);
            const SpMat L = B_ + C;
            auto A = [&](const Vec& y) -> Vec { return L * y; };
            auto P = [&](const Vec& y) -> Vec { return Binv_.solve(y); };
            bicgstab(A, rhs, x, P, 1e-14, 500);
        }
        return helmholtz_project(ctx_->poisson(), d.unpack(x)).sigma;
    }

private:
    const MetricContext* ctx_;
    SlipStokesOperator A_;
    double dt_, cfl_;
    SpMat B_;
    SpdSolver Binv_;
};

inline VectorField ns_step(const Stepper& s, const VectorField& un, const VectorField& f) { return s.step(un, f); }

/// Discrete steady slip Stokes state: K u = V f over tangential unknowns (needs gamma > 0).
inline VectorField steady_stokes(const SlipStokesOperator& A, const VectorField& f) {
    return Resolvent(A, 0.0).solve(embed(f));
}

struct ScenarioParams {
    double amplitude = 1.0;  ///< initial-data scale
    double G = 1.0;          ///< driving body force for the channel flow
};

struct Scenario {
    std::string name;
    std::function<VectorField(const Grid&, std::uint64_t seed)> initial;
    std::function<VectorField(const Grid&, double t)> forcing;
    /// Closed-form reference when one exists; empty otherwise.
    std::function<std::array<double, 3>(double x, double y, double z, double t)> reference;
    std::string reference_note;
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"rest", "poiseuille_slip", "shear_decay", "taylor_green", "random"};
    return names;
}

/// Builds a registered scenario; initial data always pass through the Helmholtz projection.
inline Scenario make_scenario(const std::string& name, const ScenarioParams& p, const BoundaryData& bd, double H) {
    Scenario s;
    s.name = name;
    auto zero_force = [](const Grid& g, double) { return VectorField(g); };
    auto projected = [](const Grid& g, VectorField v) {
        PoissonSolver ps(g);
        return helmholtz_project(ps, v).sigma;
    };
    if (name == "rest") {
        s.initial = [](const Grid& g, std::uint64_t) { return VectorField(g); };
        s.forcing = zero_force;
        s.reference = [](double, double, double, double) { return std::array<double, 3>{0, 0, 0}; };
        s.reference_note = "identically zero";
    } else if (name == "poiseuille_slip") {
        if (!(bd.gamma > 0)) throw precondition_error("poiseuille_slip needs gamma > 0");
        const double G = p.G, nu = bd.nu, gamma = bd.gamma;
        s.initial = [](const Grid& g, std::uint64_t) { return VectorField(g); };
        s.forcing = [G](const Grid& g, double) {
            VectorField f = VectorField::sample(g, [G](double, double, double) { return std::array<double, 3>{G, 0, 0}; });
            f.zero_walls();
            return f;
        };
        // steady solution of nu u'' = -G with nu u'(0) = gamma u(0), -nu u'(H) = gamma u(H)
        s.reference = [G, nu, gamma, H](double, double, double z, double) {
            return std::array<double, 3>{G / (2 * nu) * z * (H - z) + G * H / (2 * gamma), 0, 0};
        };
        s.reference_note = "steady Robin channel profile";
    } else if (name == "shear_decay") {
        const double a = p.amplitude;
        s.initial = [a, projected](const Grid& g, std::uint64_t) {
            return projected(g, VectorField::sample(g, [&](double, double, double z) {
                return std::array<double, 3>{a * std::cos(M_PI * z / g.H), 0, 0};
            }));
        };
        s.forcing = zero_force;
        s.reference_note = "one-dimensional Robin heat equation";
    } else if (name == "taylor_green") {
        const double a = p.amplitude;
        s.initial = [a, projected](const Grid& g, std::uint64_t) {
            const double kx = 2 * M_PI / g.Lx, kz = M_PI / g.H;
            return projected(g, VectorField::sample(g, [&](double x, double, double z) {
                // streamfunction sin(kx x) sin(kz z) in the x-z plane
                return std::array<double, 3>{-a * kz * std::sin(kx * x) * std::cos(kz * z) / kx, 0,
                                             a * std::cos(kx * x) * std::sin(kz * z)};
            }));
        };
        s.forcing = zero_force;
        s.reference_note = "none";
    } else if (name == "random") {
        const double a = p.amplitude;
        s.initial = [a](const Grid& g, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            PoissonSolver ps(g);
            return a * random_solenoidal_field(ps, g, rng);
        };
        s.forcing = zero_force;
        s.reference_note = "none";
    } else {
        throw precondition_error("unknown scenario '" + name + "'");
    }
    return s;
}

struct StepDiagnostics {
    double kinetic = 0;        ///< (1/2) ||u||^2
    double dissipation = 0;    ///< 2 nu int |(grad u)_s|^2, discrete form with gamma = 0
    double wall_friction = 0;  ///< remaining part of <A u, u>
    double work = 0;           ///< int f . u
};

struct WeakSolutionTrajectory {
    Grid grid;
    BoundaryData bd;
    double dt = 0;
    std::string scenario;
    std::vector<double> times;
    std::vector<VectorField> u;
    std::vector<StepDiagnostics> diag;
    std::function<VectorField(const Grid&, double)> forcing;
};

inline StepDiagnostics diagnose(const SlipStokesOperator& visc, const SlipStokesOperator& full, const VectorField& u, const VectorField& f) {
    StepDiagnostics d;
    d.kinetic = 0.5 * l2_squared(u);
    d.dissipation = visc.form(u, u);
    d.wall_friction = full.form(u, u) - d.dissipation;
    d.work = dot(f, u);
    return d;
}

struct RunOptions {
    double dt = 0.01;
    double T = 0.1;
    double cfl = 0.5;
    std::uint64_t seed = 1;
    int store_every = 1;  ///< keep every n-th field (the first and last are always kept)
};

/// Full trajectory from the scenario's initial data; step failures carry the step index.
inline WeakSolutionTrajectory run_scenario(const MetricContext& ctx, const Scenario& s, const BoundaryData& bd, const RunOptions& opt) {
    const Grid& g = ctx.grid();
    WeakSolutionTrajectory tr;
    tr.grid = g;
    tr.bd = bd;
    tr.dt = opt.dt;
    tr.scenario = s.name;
    tr.forcing = s.forcing;
    const Stepper st(ctx, bd, opt.dt, opt.cfl);
    const SlipStokesOperator visc(g, {bd.nu, 0.0});
    const int steps = int(std::llround(opt.T / opt.dt));
    VectorField u = s.initial(g, opt.seed);
    tr.times.push_back(0.0);
    tr.u.push_back(u);
    tr.diag.push_back(diagnose(visc, st.op(), u, s.forcing(g, 0.0)));
    for (int n = 0; n < steps; ++n) {
        const double t = (n + 1) * opt.dt;
        const VectorField f = s.forcing(g, t);
        try {
            u = st.step(u, f);
        } catch (const std::exception& e) {
            throw solver_error("step " + std::to_string(n + 1) + ": " + e.what());
        }
        if ((n + 1) % opt.store_every == 0 || n + 1 == steps) {
            tr.times.push_back(t);
            tr.u.push_back(u);
            tr.diag.push_back(diagnose(visc, st.op(), u, f));
        }
    }
    return tr;
}

struct EnergyLedgerRow {
    double time = 0;
    double kinetic = 0;
    double defect = 0;  ///< dE + dt (dissipation + wall) - dt work; <= 0 up to eps_scheme
};

struct EnergyReport {
    std::vector<EnergyLedgerRow> rows;
    double eps_scheme = 0;  ///< largest positive defect
    bool monotone = true;   ///< kinetic energy never increased
};

/// Per-step energy balance of a trajectory stored at every step.
inline EnergyReport energy_report(const WeakSolutionTrajectory& tr) {
    EnergyReport r;
    for (std::size_t n = 0; n < tr.u.size(); ++n) {
        EnergyLedgerRow row;
        row.time = tr.times[n];
        row.kinetic = tr.diag[n].kinetic;
        if (n > 0) {
            const double dt = tr.times[n] - tr.times[n - 1];
            row.defect = tr.diag[n].kinetic - tr.diag[n - 1].kinetic + dt * (tr.diag[n].dissipation + tr.diag[n].wall_friction - tr.diag[n].work);
            r.eps_scheme = std::max(r.eps_scheme, row.defect);
            if (tr.diag[n].kinetic > tr.diag[n - 1].kinetic) r.monotone = false;
        }
        r.rows.push_back(row);
    }
    return r;
}

/// Space-time test field phi(x, t) = theta(t) Phi(x) with Phi solenoidal tangential.
struct SpaceTimeTest {
    VectorField phi;
    std::function<double(double)> theta, dtheta;
};

struct WeakResidual {
    double defect = 0;
    double scale = 0;  ///< sum of the magnitudes of the individual integrals
    [[nodiscard]] double relative() const { return scale > 0 ? std::abs(defect) / scale : std::abs(defect); }
};

/**
 * @brief Defect of the weak formulation for one test field:
 * -int (u, dphi/dt) + int (u.grad u, phi) + int <A u, phi> - int (f, phi) - (u0, phi(0)).
 *
 * Time integrals use the right-endpoint rule on the stored steps (every step must be stored).
 */
inline WeakResidual weak_residual(const MetricContext& ctx, const WeakSolutionTrajectory& tr, const SpaceTimeTest& t) {
    require_solenoidal(t.phi, ctx.tol(), "weak_residual");
    const SlipStokesOperator A(tr.grid, tr.bd);
    WeakResidual r;
    double parts[5] = {0, 0, 0, 0, 0};
    for (std::size_t n = 1; n < tr.u.size(); ++n) {
        const double dt = tr.times[n] - tr.times[n - 1], tn = tr.times[n];
        const VectorField& u = tr.u[n];
        parts[0] -= dt * t.dtheta(tn) * dot(u, t.phi);
        parts[1] += dt * t.theta(tn) * pairing(apply_B(u, u), t.phi);
        parts[2] += dt * t.theta(tn) * A.form(u, t.phi);
        parts[3] -= dt * t.theta(tn) * dot(tr.forcing(tr.grid, tn), t.phi);
    }
    parts[4] = -t.theta(tr.times.front()) * dot(tr.u.front(), t.phi);
    for (double p : parts) {
        r.defect += p;
        r.scale += std::abs(p);
    }
    return r;
}

/**
 * @brief The same identity in the distributional-in-time form: the scalar series
 * a(t) = (u, Phi) and b(t) = (u.grad u, Phi) + <A u, Phi> - (f, Phi) are integrated
 * against theta by the trapezoidal rule.
 */
inline WeakResidual weak_residual_scalar_form(const MetricContext& ctx, const WeakSolutionTrajectory& tr, const SpaceTimeTest& t) {
    require_solenoidal(t.phi, ctx.tol(), "weak_residual_scalar_form");
    const SlipStokesOperator A(tr.grid, tr.bd);
    std::vector<double> a, b;
    for (std::size_t n = 0; n < tr.u.size(); ++n) {
        const VectorField& u = tr.u[n];
        a.push_back(dot(u, t.phi));
        b.push_back(pairing(apply_B(u, u), t.phi) + A.form(u, t.phi) - dot(tr.forcing(tr.grid, tr.times[n]), t.phi));
    }
    WeakResidual r;
    double ta = 0, tb = 0;
    for (std::size_t n = 1; n < tr.u.size(); ++n) {
        const double dt = tr.times[n] - tr.times[n - 1];
        const double t0 = tr.times[n - 1], t1 = tr.times[n];
        ta -= 0.5 * dt * (a[n - 1] * t.dtheta(t0) + a[n] * t.dtheta(t1));
        tb += 0.5 * dt * (b[n - 1] * t.theta(t0) + b[n] * t.theta(t1));
    }
    const double init = -t.theta(tr.times.front()) * a.front();
    r.defect = ta + tb + init;
    r.scale = std::abs(ta) + std::abs(tb) + std::abs(init);
    return r;
}

/// Production minus dissipation and wall friction for a steady state, relative to production.
inline double steady_energy_balance(const SlipStokesOperator& A, const VectorField& u, const VectorField& f) {
    const double prod = dot(f, u);
    return (prod - A.form(u, u)) / prod;
}

}  // namespace slipns
