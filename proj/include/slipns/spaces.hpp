// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "forms.hpp"
#include "linalg.hpp"
#include "poisson.hpp"

namespace slipns {

struct Tolerances {
    double div = 1e-10;     ///< post-projection divergence
    double ann = 1e-9;      ///< annihilator pairing defect (relative)
    double rec = 1e-8;      ///< pressure representation residual (relative)
    double mean = 1e-10;    ///< mean-value checks
    double solver = 1e-12;  ///< inner iterative solves (relative residual)
};

/// Covector over tangential velocity unknowns; pairing is a plain dot product.
struct Functional {
    Grid grid;
    Vec cov;
    bool annihilator = false;

    Functional() = default;
    explicit Functional(const Grid& g) : grid(g), cov(Vec::Zero(Eigen::Index(TangentialDofs(g).size()))) {}
    Functional(const Grid& g, Vec c, bool ann = false) : grid(g), cov(std::move(c)), annihilator(ann) {}

    Functional& operator+=(const Functional& o) { cov += o.cov; annihilator = annihilator && o.annihilator; return *this; }
    Functional& operator-=(const Functional& o) { cov -= o.cov; annihilator = annihilator && o.annihilator; return *this; }
    Functional& operator*=(double a) { cov *= a; return *this; }
    friend Functional operator+(Functional a, const Functional& b) { return a += b; }
    friend Functional operator-(Functional a, const Functional& b) { return a -= b; }
    friend Functional operator*(double s, Functional a) { return a *= s; }
};

inline double pairing(const Functional& F, const VectorField& phi) { return F.cov.dot(TangentialDofs(F.grid).pack(phi)); }

/// L^2 embedding of a face field: pairing(embed(g), phi) = integral of g . phi.
inline Functional embed(const VectorField& g) {
    return Functional(g.grid, g.grid.cell_volume() * TangentialDofs(g.grid).pack(g));
}

/**
 * @brief Assembled (A0 + I) with nu = 1, gamma = 0, plus the pieces every projection needs.
 *
 * Read-only after construction except for the FFT scratch buffers of the Poisson solver.
 */
class MetricContext {
public:
    explicit MetricContext(const Grid& g, Tolerances tol = {}, int max_iter = 500)
        : g_(g), dofs_(g), tol_(tol), max_iter_(max_iter), D_(divergence_matrix(g)), poisson_(std::make_unique<PoissonSolver>(g)) {
        M_ = stokes_matrix(g, {1.0, 0.0}) + mass_matrix(g);
        Minv_.factor(M_);
        Dt_ = D_.transpose();
    }

    [[nodiscard]] const Grid& grid() const { return g_; }
    [[nodiscard]] const TangentialDofs& dofs() const { return dofs_; }
    [[nodiscard]] const Tolerances& tol() const { return tol_; }
    [[nodiscard]] int max_iter() const { return max_iter_; }
    [[nodiscard]] const SpMat& M() const { return M_; }
    [[nodiscard]] const SpMat& D() const { return D_; }
    [[nodiscard]] const SpMat& Dt() const { return Dt_; }
    [[nodiscard]] const PoissonSolver& poisson() const { return *poisson_; }
    [[nodiscard]] Vec solve_M(const Vec& b) const { return Minv_.solve(b); }

    /// Metric norm sqrt(v^T (A0+I) v) of a tangential field.
    [[nodiscard]] double metric_norm(const VectorField& v) const {
        const Vec x = dofs_.pack(v);
        return std::sqrt(x.dot(M_ * x));
    }

    /// Solves D Minv D^T lambda = r by preconditioned CG; Minv is any SPD velocity solve.
    /// The preconditioner models the operator on gradients as (c0 - 2 visc L)^{-1}(-L)/V.
    Vec schur_solve(const std::function<Vec(const Vec&)>& Minv, const Vec& r, double c0, double visc, IterStats* st = nullptr) const {
        const double V = g_.cell_volume();
        auto S = [&](const Vec& l) -> Vec { return D_ * Minv(Dt_ * l); };
        auto P = [&](const Vec& x) -> Vec {
            ScalarField s(g_);
            for (std::size_t n = 0; n < g_.cells(); ++n) s.data[n] = x[Eigen::Index(n)];
            const ScalarField q = poisson_->solve(s);
            Vec y(x.size());
            double mean = 0;
            for (Eigen::Index n = 0; n < x.size(); ++n) mean += x[n];
            mean /= double(x.size());
            for (std::size_t n = 0; n < g_.cells(); ++n) y[Eigen::Index(n)] = V * (-c0 * q.data[n] + 2 * visc * (x[Eigen::Index(n)] - mean));
            return y;
        };
        Vec rr = r.array() - r.mean();
        Vec l = Vec::Zero(r.size());
        const IterStats s = pcg(S, rr, l, P, tol_.solver, max_iter_);
        if (st) *st = s;
        return l;
    }

private:
    Grid g_;
    TangentialDofs dofs_;
    Tolerances tol_;
    int max_iter_;
    SpMat D_, Dt_, M_;
    SpdSolver Minv_;
    std::unique_ptr<PoissonSolver> poisson_;
};

/// Dual norm sqrt(<g, (A0+I)^{-1} g>).
inline double neg_norm(const MetricContext& ctx, const Functional& g) {
    return std::sqrt(std::max(0.0, g.cov.dot(ctx.solve_M(g.cov))));
}

/// Inner product (g, h)_{-1,2} = <g, (A0+I)^{-1} h>.
inline double neg_inner(const MetricContext& ctx, const Functional& g, const Functional& h) {
    return g.cov.dot(ctx.solve_M(h.cov));
}

struct HelmholtzResult {
    VectorField sigma;     ///< solenoidal, zero normal wall values
    VectorField grad_psi;  ///< gradient part; its wall values carry g . n
    ScalarField psi;
    double compat = 0;     ///< mean of the Poisson right-hand side before removal
};

/// L^2-orthogonal Helmholtz split g = sigma + grad psi by one Neumann Poisson solve.
inline HelmholtzResult helmholtz_project(const PoissonSolver& ps, const VectorField& g) {
    VectorField inner = g;
    inner.zero_walls();
    HelmholtzResult r;
    r.psi = ps.solve(divergence(inner), &r.compat);
    r.grad_psi = gradient(r.psi);
    const std::size_t layer = std::size_t(g.grid.nx) * g.grid.ny;
    for (std::size_t n = 0; n < layer; ++n) {
        r.grad_psi.w[n] = g.w[n];
        r.grad_psi.w[layer * g.grid.nz + n] = g.w[layer * g.grid.nz + n];
    }
    r.sigma = g - r.grad_psi;
    r.sigma.zero_walls();
    return r;
}

inline HelmholtzResult helmholtz_project(const MetricContext& ctx, const VectorField& g) { return helmholtz_project(ctx.poisson(), g); }

/// Orthogonal projection in the (A0+I) metric whose kernel is the solenoidal tangential subspace.
inline VectorField project_E12(const MetricContext& ctx, const VectorField& psi) {
    if (!psi.is_tangential()) throw precondition_error("project_E12 needs a tangential field");
    const Vec x = ctx.dofs().pack(psi);
    const Vec lam = ctx.schur_solve([&](const Vec& b) { return ctx.solve_M(b); }, ctx.D() * x, 1.0, 1.0);
    return ctx.dofs().unpack(ctx.solve_M(ctx.Dt() * lam));
}

/// The dual projection (A0+I) E12 (A0+I)^{-1}; its range consists of annihilators.
inline Functional project_E_neg12(const MetricContext& ctx, const Functional& g) {
    const VectorField y = ctx.dofs().unpack(ctx.solve_M(g.cov));
    const Vec e = ctx.dofs().pack(project_E12(ctx, y));
    return Functional(g.grid, ctx.M() * e, true);
}

/// Largest relative pairing of F against the given solenoidal tangential samples.
inline double annihilator_defect(const MetricContext& ctx, const Functional& F, const std::vector<VectorField>& samples) {
    const double fn = neg_norm(ctx, F);
    double worst = 0;
    for (const auto& s : samples) {
        const double sn = ctx.metric_norm(s);
        if (sn == 0) continue;
        worst = std::max(worst, std::abs(pairing(F, s)) / sn);
    }
    return fn > 0 ? worst / fn : worst;
}

struct BogovskiiResult {
    VectorField psi;
    double div_residual = 0;  ///< ||div psi - g||_2 / ||g||_2 on the box
    double constant = 0;      ///< ||psi||_{1,2} / ||g||_2
};

/**
 * @brief Right inverse of the divergence on a box with zero boundary values.
 *
 * Minimises the metric norm of psi subject to div psi = g in the box; psi vanishes
 * on the box boundary and outside.
 */
inline BogovskiiResult bogovskii(const MetricContext& ctx, const ScalarField& g, const CellBox& box) {
    const Grid& G = ctx.grid();
    box.validate(G);
    const TangentialDofs& d = ctx.dofs();
    std::vector<int> cells;
    double mean = 0, sq = 0;
    for (int k = box.k0; k < box.k1; ++k)
        for (int j = box.j0; j < box.j1; ++j)
            for (int i = box.i0; i < box.i1; ++i) {
                cells.push_back(int(G.c(i, j, k)));
                mean += g(i, j, k);
                sq += g(i, j, k) * g(i, j, k);
            }
    mean /= double(cells.size());
    const double rms = std::sqrt(sq / double(cells.size()));
    if (std::abs(mean) > ctx.tol().mean * std::max(1.0, rms)) throw precondition_error("mean-value not zero on the subdomain");

    BogovskiiResult res;
    res.psi = VectorField(G);
    if (rms == 0) return res;

    std::vector<int> sub;
    for (int k = box.k0; k < box.k1; ++k)
        for (int j = box.j0; j < box.j1; ++j)
            for (int i = box.i0; i < box.i1; ++i) {
                if (i > box.i0) sub.push_back(int(d.u(i, j, k)));
                if (j > box.j0) sub.push_back(int(d.v(i, j, k)));
                if (k > box.k0) sub.push_back(int(d.w(i, j, k)));
            }
    std::vector<int> pos(d.size(), -1), cpos(G.cells(), -1);
    for (std::size_t n = 0; n < sub.size(); ++n) pos[sub[n]] = int(n);
    for (std::size_t n = 0; n < cells.size(); ++n) cpos[cells[n]] = int(n);

    Triplets tm, td;
    for (int col = 0; col < ctx.M().outerSize(); ++col)
        for (SpMat::InnerIterator it(ctx.M(), col); it; ++it)
            if (pos[it.row()] >= 0 && pos[col] >= 0) tm.emplace_back(pos[it.row()], pos[col], it.value());
    for (int col = 0; col < ctx.D().outerSize(); ++col)
        for (SpMat::InnerIterator it(ctx.D(), col); it; ++it)
            if (cpos[it.row()] >= 0 && pos[col] >= 0) td.emplace_back(cpos[it.row()], pos[col], it.value());
    SpMat Ms(Eigen::Index(sub.size()), Eigen::Index(sub.size())), Ds(Eigen::Index(cells.size()), Eigen::Index(sub.size()));
    Ms.setFromTriplets(tm.begin(), tm.end());
    Ds.setFromTriplets(td.begin(), td.end());
    const SpMat Dst = Ds.transpose();
    const SpdSolver Msinv(Ms);

    Vec rhs(Eigen::Index(cells.size()));
    for (std::size_t n = 0; n < cells.size(); ++n) rhs[Eigen::Index(n)] = g.data[std::size_t(cells[n])] - mean;
    Vec lam = Vec::Zero(rhs.size());
    auto S = [&](const Vec& l) -> Vec { return Ds * Msinv.solve(Dst * l); };
    auto I = [](const Vec& x) -> Vec { return x; };
    pcg(S, rhs, lam, I, ctx.tol().solver, 20 * ctx.max_iter());
    const Vec ps = Msinv.solve(Dst * lam);

    Vec full = Vec::Zero(Eigen::Index(d.size()));
    for (std::size_t n = 0; n < sub.size(); ++n) full[sub[n]] = ps[Eigen::Index(n)];
    res.psi = d.unpack(full);
    res.div_residual = (Ds * ps - rhs).norm() / rhs.norm();
    res.constant = ctx.metric_norm(res.psi) / (rms * std::sqrt(double(cells.size()) * G.cell_volume()));
    return res;
}

/// Mean of p over the cells of a box.
inline double box_mean(const ScalarField& p, const CellBox& box) {
    double s = 0;
    for (int k = box.k0; k < box.k1; ++k)
        for (int j = box.j0; j < box.j1; ++j)
            for (int i = box.i0; i < box.i1; ++i) s += p(i, j, k);
    return s / double(box.count());
}

enum class PressureMethod { direct, cg };

struct PressureRecovery {
    ScalarField p;
    double residual = 0;  ///< ||F + V D^T p|| / ||F||
    double constant = 0;  ///< ||p||_2 / neg_norm(F)
};

/**
 * @brief Pressure of an annihilator: pairing(F, psi) = -integral p div psi, mean zero on omega0.
 *
 * The cg method starts from a seeded random guess; it exists to check uniqueness against the direct path.
 */
inline PressureRecovery pressure_from_functional(const MetricContext& ctx, const Functional& F, const CellBox& omega0,
                                                 PressureMethod method = PressureMethod::direct, unsigned seed = 1) {
    const Grid& g = ctx.grid();
    omega0.validate(g);
    const double V = g.cell_volume();
    PressureRecovery r;
    const double fn = F.cov.norm();
    ScalarField rhs(g);
    {
        const Vec dv = ctx.D() * (F.cov / V);
        for (std::size_t n = 0; n < g.cells(); ++n) rhs.data[n] = dv[Eigen::Index(n)];
    }
    if (method == PressureMethod::direct) {
        r.p = ctx.poisson().solve(rhs);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1, 1);
        Vec x(Eigen::Index(g.cells()));
        for (auto& e : x) e = U(rng);
        Vec b(Eigen::Index(g.cells()));
        for (std::size_t n = 0; n < g.cells(); ++n) b[Eigen::Index(n)] = -rhs.data[n];
        b.array() -= b.mean();
        auto A = [&](const Vec& y) -> Vec {
            ScalarField s(g);
            for (std::size_t n = 0; n < g.cells(); ++n) s.data[n] = y[Eigen::Index(n)];
            const ScalarField l = laplacian(s);
            Vec o(y.size());
            for (std::size_t n = 0; n < g.cells(); ++n) o[Eigen::Index(n)] = -l.data[n];
            return o;
        };
        auto Id = [](const Vec& y) -> Vec { return y; };
        pcg(A, b, x, Id, 1e-14, 20 * int(g.cells()));
        r.p = ScalarField(g);
        for (std::size_t n = 0; n < g.cells(); ++n) r.p.data[n] = x[Eigen::Index(n)];
    }
    const double m = box_mean(r.p, omega0);
    for (auto& x : r.p.data) x -= m;
    Vec pv(Eigen::Index(g.cells()));
    for (std::size_t n = 0; n < g.cells(); ++n) pv[Eigen::Index(n)] = r.p.data[n];
    r.residual = fn > 0 ? (F.cov + V * (ctx.Dt() * pv)).norm() / fn : 0.0;
    if (r.residual > ctx.tol().rec) throw precondition_error("functional is not an annihilator (representation residual " + std::to_string(r.residual) + ")");
    const double nn = neg_norm(ctx, F);
    r.constant = nn > 0 ? norm(r.p, 2.0) / nn : 0.0;
    return r;
}

}  // namespace slipns
