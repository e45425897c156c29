// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "grid.hpp"
#include "poisson.hpp"
#include "spaces.hpp"

namespace slipns {

/// Smooth random tangential field: a few low-wavenumber trigonometric modes per component.
/// The normal component carries sin(l pi z / H) so it vanishes on both walls.
inline VectorField random_smooth_field(const Grid& g, std::mt19937_64& rng, int modes = 3) {
    std::uniform_real_distribution<double> U(-1, 1), Ph(0, 2 * M_PI);
    std::uniform_int_distribution<int> K(0, 2), L(1, 3);
    struct Mode { int mx, my, l; double amp, phase; };
    std::array<std::vector<Mode>, 3> comp;
    for (auto& c : comp)
        for (int m = 0; m < modes; ++m) c.push_back({K(rng), K(rng), L(rng), U(rng), Ph(rng)});
    auto eval = [&](const std::vector<Mode>& ms, double x, double y, double z, bool normal) {
        double s = 0;
        for (const auto& m : ms) {
            const double arg = 2 * M_PI * (m.mx * x / g.Lx + m.my * y / g.Ly) + m.phase;
            const double zf = normal ? std::sin(m.l * M_PI * z / g.H) : std::cos((m.l - 1) * M_PI * z / g.H + m.phase);
            s += m.amp * std::cos(arg) * zf;
        }
        return s;
    };
    VectorField v = VectorField::sample(g, [&](double x, double y, double z) {
        return std::array<double, 3>{eval(comp[0], x, y, z, false), eval(comp[1], x, y, z, false), eval(comp[2], x, y, z, true)};
    });
    v.zero_walls();
    return v;
}

/// Smooth random solenoidal tangential field (Helmholtz projection of random_smooth_field).
inline VectorField random_solenoidal_field(const PoissonSolver& ps, const Grid& g, std::mt19937_64& rng, int modes = 3) {
    return helmholtz_project(ps, random_smooth_field(g, rng, modes)).sigma;
}

/// Smooth random scalar with zero normal derivative at the walls.
inline ScalarField random_smooth_scalar(const Grid& g, std::mt19937_64& rng, int modes = 3) {
    std::uniform_real_distribution<double> U(-1, 1), Ph(0, 2 * M_PI);
    std::uniform_int_distribution<int> K(0, 2), L(0, 3);
    struct Mode { int mx, my, l; double amp, phase; };
    std::vector<Mode> ms;
    for (int m = 0; m < modes; ++m) ms.push_back({K(rng), K(rng), L(rng), U(rng), Ph(rng)});
    return ScalarField::sample(g, [&](double x, double y, double z) {
        double s = 0;
        for (const auto& m : ms) s += m.amp * std::cos(2 * M_PI * (m.mx * x / g.Lx + m.my * y / g.Ly) + m.phase) * std::cos(m.l * M_PI * z / g.H);
        return s;
    });
}

}  // namespace slipns
