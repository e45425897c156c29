// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace slipns {

/// Error raised for violated preconditions of the numerical routines.
struct precondition_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Error raised when an iterative or direct solve does not reach its target.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * @brief Staggered channel grid: periodic in x and y, walls at z = 0 and z = H.
 *
 * Cell (i,j,k) spans [i hx,(i+1) hx] x [j hy,(j+1) hy] x [k hz,(k+1) hz].
 * Scalars live at cell centres, u on x-faces, v on y-faces, w on z-faces.
 * The z-faces k = 0 and k = nz are the wall layers.
 */
struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double Lx = 0, Ly = 0, H = 0;
    double hx = 0, hy = 0, hz = 0;

    [[nodiscard]] std::size_t cells() const { return std::size_t(nx) * ny * nz; }
    [[nodiscard]] std::size_t wfaces() const { return std::size_t(nx) * ny * (nz + 1); }
    [[nodiscard]] double cell_volume() const { return hx * hy * hz; }
    [[nodiscard]] double volume() const { return Lx * Ly * H; }
    [[nodiscard]] double wall_area() const { return Lx * Ly; }
    [[nodiscard]] double hmin() const { return std::min(hx, std::min(hy, hz)); }

    [[nodiscard]] int wrapx(int i) const { return ((i % nx) + nx) % nx; }
    [[nodiscard]] int wrapy(int j) const { return ((j % ny) + ny) % ny; }

    /// Cell-centred index, x fastest. Also used for u- and v-face arrays.
    [[nodiscard]] std::size_t c(int i, int j, int k) const {
        return std::size_t(wrapx(i)) + std::size_t(nx) * (std::size_t(wrapy(j)) + std::size_t(ny) * std::size_t(k));
    }
    /// z-face index, k in [0, nz].
    [[nodiscard]] std::size_t wf(int i, int j, int k) const { return c(i, j, 0) + std::size_t(nx) * ny * std::size_t(k); }

    [[nodiscard]] double xc(int i) const { return (i + 0.5) * hx; }
    [[nodiscard]] double yc(int j) const { return (j + 0.5) * hy; }
    [[nodiscard]] double zc(int k) const { return (k + 0.5) * hz; }
    [[nodiscard]] double xf(int i) const { return i * hx; }
    [[nodiscard]] double yf(int j) const { return j * hy; }
    [[nodiscard]] double zf(int k) const { return k * hz; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz && a.Lx == b.Lx && a.Ly == b.Ly && a.H == b.H;
    }
};

inline Grid build_grid(int nx, int ny, int nz, double Lx, double Ly, double H) {
    if (nx < 4 || ny < 4 || nz < 4) throw precondition_error("count below minimum (4 cells per direction)");
    if (!(Lx > 0) || !(Ly > 0) || !(H > 0)) throw precondition_error("lengths must be positive");
    Grid g;
    g.nx = nx; g.ny = ny; g.nz = nz;
    g.Lx = Lx; g.Ly = Ly; g.H = H;
    g.hx = Lx / nx; g.hy = Ly / ny; g.hz = H / nz;
    return g;
}

/// Viscosity and wall friction of the Navier slip condition.
struct BoundaryData {
    double nu = 1.0;
    double gamma = 0.0;

    void validate() const {
        if (!(nu > 0)) throw precondition_error("viscosity must be positive");
        if (!(gamma >= 0)) throw precondition_error("friction coefficient must be non-negative");
    }
};

enum class Position { center, face, edge };

/// Cell-centred scalar.
struct ScalarField {
    Grid grid;
    std::vector<double> data;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double value = 0.0) : grid(g), data(g.cells(), value) {}

    [[nodiscard]] static constexpr Position position() { return Position::center; }
    double& operator()(int i, int j, int k) { return data[grid.c(i, j, k)]; }
    [[nodiscard]] double operator()(int i, int j, int k) const { return data[grid.c(i, j, k)]; }

    template <class F>
    static ScalarField sample(const Grid& g, F&& f) {
        ScalarField s(g);
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) s(i, j, k) = f(g.xc(i), g.yc(j), g.zc(k));
        return s;
    }
};

/**
 * @brief Face-staggered vector field.
 *
 * u and v carry nx*ny*nz values, w carries nx*ny*(nz+1) including the two wall layers.
 */
struct VectorField {
    Grid grid;
    std::vector<double> u, v, w;

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), u(g.cells(), 0.0), v(g.cells(), 0.0), w(g.wfaces(), 0.0) {}

    [[nodiscard]] static constexpr Position position() { return Position::face; }

    /// True when both wall layers of w are exactly zero.
    [[nodiscard]] bool is_tangential() const {
        const std::size_t layer = std::size_t(grid.nx) * grid.ny;
        for (std::size_t n = 0; n < layer; ++n)
            if (w[n] != 0.0 || w[layer * grid.nz + n] != 0.0) return false;
        return true;
    }

    void zero_walls() {
        const std::size_t layer = std::size_t(grid.nx) * grid.ny;
        for (std::size_t n = 0; n < layer; ++n) w[n] = w[layer * grid.nz + n] = 0.0;
    }

    /// Sample an analytic field f(x,y,z) -> {fx,fy,fz} at the face positions.
    template <class F>
    static VectorField sample(const Grid& g, F&& f) {
        VectorField r(g);
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    r.u[g.c(i, j, k)] = f(g.xf(i), g.yc(j), g.zc(k))[0];
                    r.v[g.c(i, j, k)] = f(g.xc(i), g.yf(j), g.zc(k))[1];
                }
        for (int k = 0; k <= g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) r.w[g.wf(i, j, k)] = f(g.xc(i), g.yc(j), g.zf(k))[2];
        return r;
    }

    VectorField& operator+=(const VectorField& o) {
        for (std::size_t n = 0; n < u.size(); ++n) { u[n] += o.u[n]; v[n] += o.v[n]; }
        for (std::size_t n = 0; n < w.size(); ++n) w[n] += o.w[n];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (std::size_t n = 0; n < u.size(); ++n) { u[n] -= o.u[n]; v[n] -= o.v[n]; }
        for (std::size_t n = 0; n < w.size(); ++n) w[n] -= o.w[n];
        return *this;
    }
    VectorField& operator*=(double a) {
        for (auto& x : u) x *= a;
        for (auto& x : v) x *= a;
        for (auto& x : w) x *= a;
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }
};

/// Nine-component tensor sampled at cell centres, row-major (T[a][b] = d_b v_a for gradients).
struct TensorField {
    Grid grid;
    std::array<std::vector<double>, 9> comp;

    TensorField() = default;
    explicit TensorField(const Grid& g) : grid(g) {
        for (auto& c : comp) c.assign(g.cells(), 0.0);
    }
    [[nodiscard]] static constexpr Position position() { return Position::center; }
    std::vector<double>& operator()(int a, int b) { return comp[std::size_t(3 * a + b)]; }
    [[nodiscard]] const std::vector<double>& operator()(int a, int b) const { return comp[std::size_t(3 * a + b)]; }
};

/// Half-open box of cells [i0,i1) x [j0,j1) x [k0,k1).
struct CellBox {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0, k0 = 0, k1 = 0;

    static CellBox whole(const Grid& g) { return {0, g.nx, 0, g.ny, 0, g.nz}; }
    [[nodiscard]] bool contains(int i, int j, int k) const {
        return i >= i0 && i < i1 && j >= j0 && j < j1 && k >= k0 && k < k1;
    }
    [[nodiscard]] std::size_t count() const { return std::size_t(i1 - i0) * (j1 - j0) * (k1 - k0); }
    void validate(const Grid& g) const {
        if (i0 < 0 || j0 < 0 || k0 < 0 || i1 > g.nx || j1 > g.ny || k1 > g.nz || i0 >= i1 || j0 >= j1 || k0 >= k1)
            throw precondition_error("cell box outside the grid or empty");
    }
};

}  // namespace slipns
