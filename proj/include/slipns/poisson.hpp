// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

#include "calculus.hpp"
#include "grid.hpp"

namespace slipns {

/**
 * @brief Direct solver for the Neumann Laplacian of cell-centred scalars.
 *
 * Diagonalises the periodic directions with a real FFT and solves one tridiagonal
 * system in z per horizontal mode. Solutions are returned with zero mean.
 */
class PoissonSolver {
public:
    explicit PoissonSolver(const Grid& g) : g_(g), ncx_(g.nx / 2 + 1) {
        const std::size_t nreal = g.cells();
        const std::size_t ncomp = std::size_t(ncx_) * g.ny * g.nz;
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * nreal));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ncomp));
        int dims[2] = {g.ny, g.nx};
        fwd_ = fftw_plan_many_dft_r2c(2, dims, g.nz, real_, nullptr, 1, g.nx * g.ny, spec_, nullptr, 1, ncx_ * g.ny, FFTW_ESTIMATE);
        bwd_ = fftw_plan_many_dft_c2r(2, dims, g.nz, spec_, nullptr, 1, ncx_ * g.ny, real_, nullptr, 1, g.nx * g.ny, FFTW_ESTIMATE);
        lam_.resize(std::size_t(ncx_) * g.ny);
        for (int l = 0; l < g.ny; ++l)
            for (int m = 0; m < ncx_; ++m) {
                const double sx = std::sin(M_PI * m / g.nx), sy = std::sin(M_PI * l / g.ny);
                lam_[std::size_t(l) * ncx_ + m] = -4.0 * sx * sx / (g.hx * g.hx) - 4.0 * sy * sy / (g.hy * g.hy);
            }
    }
    PoissonSolver(const PoissonSolver&) = delete;
    PoissonSolver& operator=(const PoissonSolver&) = delete;
    ~PoissonSolver() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    [[nodiscard]] const Grid& grid() const { return g_; }

    /// Solves laplacian(p) = rhs. The mean of rhs is removed first and returned through `compat`.
    ScalarField solve(const ScalarField& rhs, double* compat = nullptr) const {
        const Grid& g = g_;
        double mean = 0;
        for (double x : rhs.data) mean += x;
        mean /= double(g.cells());
        if (compat) *compat = mean;
        for (std::size_t n = 0; n < g.cells(); ++n) real_[n] = rhs.data[n] - mean;
        fftw_execute(fwd_);
        const double iz = 1.0 / (g.hz * g.hz);
        std::vector<std::complex<double>> b(g.nz), x(g.nz), cp(g.nz);
        const std::size_t plane = std::size_t(ncx_) * g.ny;
        for (std::size_t mode = 0; mode < plane; ++mode) {
            for (int k = 0; k < g.nz; ++k) b[k] = {spec_[plane * k + mode][0], spec_[plane * k + mode][1]};
            if (mode == 0) {
                // Singular Neumann mode: integrate the recursion from x0 = 0, then remove the mean.
                x[0] = 0;
                if (g.nz > 1) x[1] = x[0] + b[0] / iz;
                for (int k = 1; k + 1 < g.nz; ++k) x[k + 1] = 2.0 * x[k] - x[k - 1] + b[k] / iz;
                std::complex<double> m = 0;
                for (int k = 0; k < g.nz; ++k) m += x[k];
                m /= double(g.nz);
                for (int k = 0; k < g.nz; ++k) x[k] -= m;
            } else {
                const double lam = lam_[mode];
                // Thomas algorithm for iz*(x[k+1] - 2x[k] + x[k-1]) + lam x[k] = b[k] with Neumann ends
                std::vector<double> diag(g.nz), cprime(g.nz);
                for (int k = 0; k < g.nz; ++k) diag[k] = lam - ((k == 0 || k == g.nz - 1) ? iz : 2 * iz);
                cprime[0] = iz / diag[0];
                cp[0] = b[0] / diag[0];
                for (int k = 1; k < g.nz; ++k) {
                    const double den = diag[k] - iz * cprime[k - 1];
                    cprime[k] = iz / den;
                    cp[k] = (b[k] - iz * cp[k - 1]) / den;
                }
                x[g.nz - 1] = cp[g.nz - 1];
                for (int k = g.nz - 2; k >= 0; --k) x[k] = cp[k] - cprime[k] * x[k + 1];
            }
            for (int k = 0; k < g.nz; ++k) {
                spec_[plane * k + mode][0] = x[k].real();
                spec_[plane * k + mode][1] = x[k].imag();
            }
        }
        fftw_execute(bwd_);
        ScalarField p(g);
        const double scale = 1.0 / (double(g.nx) * g.ny);
        for (std::size_t n = 0; n < g.cells(); ++n) p.data[n] = real_[n] * scale;
        return p;
    }

private:
    Grid g_;
    int ncx_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_{}, bwd_{};
    std::vector<double> lam_;
};

}  // namespace slipns
