// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace slipns {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/**
 * @brief Numbering of the tangential velocity unknowns.
 *
 * Order: all u faces, all v faces, then the interior w faces k = 1..nz-1.
 */
struct TangentialDofs {
    Grid g;
    explicit TangentialDofs(const Grid& grid) : g(grid) {}

    [[nodiscard]] std::size_t size() const { return 2 * g.cells() + std::size_t(g.nx) * g.ny * (g.nz - 1); }
    [[nodiscard]] std::size_t u(int i, int j, int k) const { return g.c(i, j, k); }
    [[nodiscard]] std::size_t v(int i, int j, int k) const { return g.cells() + g.c(i, j, k); }
    /// Interior w face, k in [1, nz-1].
    [[nodiscard]] std::size_t w(int i, int j, int k) const { return 2 * g.cells() + g.c(i, j, 0) + std::size_t(g.nx) * g.ny * (k - 1); }

    [[nodiscard]] Vec pack(const VectorField& f) const {
        Vec x(size());
        const std::size_t N = g.cells(), layer = std::size_t(g.nx) * g.ny;
        for (std::size_t n = 0; n < N; ++n) { x[n] = f.u[n]; x[N + n] = f.v[n]; }
        for (std::size_t n = 0; n < layer * (g.nz - 1); ++n) x[2 * N + n] = f.w[layer + n];
        return x;
    }
    [[nodiscard]] VectorField unpack(const Vec& x) const {
        VectorField f(g);
        const std::size_t N = g.cells(), layer = std::size_t(g.nx) * g.ny;
        for (std::size_t n = 0; n < N; ++n) { f.u[n] = x[n]; f.v[n] = x[N + n]; }
        for (std::size_t n = 0; n < layer * (g.nz - 1); ++n) f.w[layer + n] = x[2 * N + n];
        return f;
    }
};

/// Divergence restricted to tangential unknowns: rows are cells, unweighted differences.
inline SpMat divergence_matrix(const Grid& g) {
    TangentialDofs d(g);
    Triplets t;
    t.reserve(6 * g.cells());
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int r = int(g.c(i, j, k));
                t.emplace_back(r, int(d.u(i + 1, j, k)), 1.0 / g.hx);
                t.emplace_back(r, int(d.u(i, j, k)), -1.0 / g.hx);
                t.emplace_back(r, int(d.v(i, j + 1, k)), 1.0 / g.hy);
                t.emplace_back(r, int(d.v(i, j, k)), -1.0 / g.hy);
                if (k + 1 < g.nz) t.emplace_back(r, int(d.w(i, j, k + 1)), 1.0 / g.hz);
                if (k > 0) t.emplace_back(r, int(d.w(i, j, k)), -1.0 / g.hz);
            }
    SpMat D(Eigen::Index(g.cells()), Eigen::Index(d.size()));
    D.setFromTriplets(t.begin(), t.end());
    return D;
}

struct IterStats {
    int iterations = 0;
    double residual = 0;  ///< final relative residual
};

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite operator.
inline IterStats pcg(const std::function<Vec(const Vec&)>& A, const Vec& b, Vec& x,
                     const std::function<Vec(const Vec&)>& M, double tol, int max_iter) {
    IterStats st;
    const double bn = b.norm();
    if (bn == 0) {
        x.setZero();
        return st;
    }
    Vec r = b - A(x);
    Vec z = M(r), p = z;
    double rz = r.dot(z);
    for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
        st.residual = r.norm() / bn;
        if (st.residual <= tol) return st;
        const Vec Ap = A(p);
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        z = M(r);
        const double rz1 = r.dot(z);
        p = z + (rz1 / rz) * p;
        rz = rz1;
    }
    st.residual = r.norm() / bn;
    if (st.residual > tol) throw solver_error("conjugate gradients stalled at relative residual " + std::to_string(st.residual));
    return st;
}

/// Right-preconditioned BiCGSTAB for the non-symmetric convection-diffusion systems.
inline IterStats bicgstab(const std::function<Vec(const Vec&)>& A, const Vec& b, Vec& x,
                          const std::function<Vec(const Vec&)>& M, double tol, int max_iter) {
    IterStats st;
    const double bn = b.norm();
    if (bn == 0) {
        x.setZero();
        return st;
    }
    Vec r = b - A(x), rhat = r, p = Vec::Zero(b.size()), v = Vec::Zero(b.size());
    double rho = 1, alpha = 1, omega = 1;
    for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
        st.residual = r.norm() / bn;
        if (st.residual <= tol) return st;
        const double rho1 = rhat.dot(r);
        if (rho1 == 0) break;
        const double beta = (rho1 / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        const Vec ph = M(p);
        v = A(ph);
        alpha = rho1 / rhat.dot(v);
        const Vec s = r - alpha * v;
        const Vec sh = M(s);
        const Vec t = A(sh);
        const double tt = t.dot(t);
        omega = tt > 0 ? t.dot(s) / tt : 0.0;
        x += alpha * ph + omega * sh;
        r = s - omega * t;
        rho = rho1;
        if (omega == 0) break;
    }
    st.residual = (b - A(x)).norm() / bn;
    if (st.residual > tol) throw solver_error("BiCGSTAB stalled at relative residual " + std::to_string(st.residual));
    return st;
}

/// Sparse Cholesky wrapper that reports factorisation failures.
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const SpMat& A) { factor(A); }
    void factor(const SpMat& A) {
        A_ = A;
        llt_.compute(A_);
        if (llt_.info() != Eigen::Success) throw solver_error("sparse Cholesky factorisation failed");
    }
    [[nodiscard]] Vec solve(const Vec& b) const {
        Vec x = llt_.solve(b);
        // one step of iterative refinement keeps residuals near machine precision
        x += llt_.solve(b - A_ * x);
        return x;
    }
    [[nodiscard]] const SpMat& matrix() const { return A_; }

private:
    SpMat A_;
    Eigen::SimplicialLDLT<SpMat> llt_;
};

}  // namespace slipns
