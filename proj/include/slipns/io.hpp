// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "interior.hpp"
#include "pressure.hpp"
#include "solver.hpp"

namespace slipns::io {

/// Shortest text that reads back to the same double, so equal runs give equal files.
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

inline void write_csv(const std::filesystem::path& p, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    auto f = open_out(p);
    for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "," : "") << header[c];
    f << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) f << (c ? "," : "") << num(r[c]);
        f << '\n';
    }
}

/// t, kinetic, dissipation, wall_friction, work, balance_defect.
inline void write_energy_csv(const std::filesystem::path& p, const WeakSolutionTrajectory& tr, const EnergyReport& e) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < e.rows.size(); ++n) {
        const auto& d = tr.diag[n];
        rows.push_back({e.rows[n].time, d.kinetic, d.dissipation, d.wall_friction, d.work, e.rows[n].defect});
    }
    write_csv(p, {"t", "kinetic", "dissipation", "wall_friction", "work", "balance_defect"}, rows);
}

/// t, then the L2 norm and the Omega0 mean of each pressure component.
inline void write_pressure_csv(const std::filesystem::path& p, const PressureDecomposition& d) {
    std::vector<std::vector<double>> rows;
    for (const auto& e : d.entries) {
        std::vector<double> r{e.t};
        for (double x : e.l2) r.push_back(x);
        for (double x : e.mean) r.push_back(x);
        rows.push_back(std::move(r));
    }
    write_csv(p, {"t", "p1_l2", "p21_l2", "p22_l2", "p23_l2", "p1_mean", "p21_mean", "p22_mean", "p23_mean"}, rows);
}

/// t, |alpha|, then max over the box of |D^alpha p| and |D^alpha d_t u|.
inline void write_regularity_csv(const std::filesystem::path& p, const RegularityLedger& L) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : L.rows) rows.push_back({r.t, double(r.order), r.p, r.dtu});
    write_csv(p, {"t", "alpha", "p", "dtu"}, rows);
}

struct ProbeSample {
    double t = 0;
    NewtonianResult newton;
    P12Eval p12;
};

/// One text block per probe: the setup, then the last sample's pieces and the time series.
inline std::string probe_report(const std::string& name, const ProbePoint& pr, const std::vector<ProbeSample>& s) {
    std::ostringstream o;
    o << "[probe " << name << "]\n";
    o << "x0 = " << num(pr.x0[0]) << " " << num(pr.x0[1]) << " " << num(pr.x0[2]) << "\n";
    o << "e = " << num(pr.e[0]) << " " << num(pr.e[1]) << " " << num(pr.e[2]) << "\n";
    o << "cutoff = " << num(pr.cutoff.rho1) << " " << num(pr.cutoff.rho2) << " degree " << pr.cutoff.degree << "\n";
    if (!s.empty()) {
        const auto& l = s.back();
        o << "t = " << num(l.t) << "\n";
        o << "grad_p.e = " << num(l.newton.value) << "\n";
        o << "P1 = " << num(l.newton.P1) << "\nP2 = " << num(l.newton.P2) << "\nP3 = " << num(l.newton.P3) << "\n";
        o << "P12 = " << num(l.newton.P12) << "\n";
        o << "P12_direct = " << num(-l.p12.direct) << "\nP12_rewritten = " << num(-l.p12.rewritten()) << "\n";
        o << "viscous = " << num(l.p12.viscous) << "\nconvection = " << num(l.p12.convection) << "\n";
    }
    o << "series t,grad_p.e,P1,P2,P3,P12_direct,viscous\n";
    for (const auto& x : s)
        o << num(x.t) << "," << num(x.newton.value) << "," << num(x.newton.P1) << "," << num(x.newton.P2) << "," << num(x.newton.P3) << ","
          << num(-x.p12.direct) << "," << num(x.p12.viscous) << "\n";
    return o.str();
}

/**
 * @brief Legacy ASCII VTK, one file per step: cell-centred velocity and pressure on the
 * structured points of the cell corners.
 */
inline void write_vtk(const std::filesystem::path& p, const VectorField& u, const ScalarField* pressure, double t) {
    const Grid& g = u.grid;
    auto f = open_out(p);
    f << "# vtk DataFile Version 3.0\n";
    f << "slip channel t=" << num(t) << "\n";
    f << "ASCII\nDATASET STRUCTURED_POINTS\n";
    f << "DIMENSIONS " << g.nx + 1 << " " << g.ny + 1 << " " << g.nz + 1 << "\n";
    f << "ORIGIN 0 0 0\n";
    f << "SPACING " << num(g.hx) << " " << num(g.hy) << " " << num(g.hz) << "\n";
    f << "CELL_DATA " << g.cells() << "\n";
    const auto c = to_centers(u);
    f << "VECTORS velocity double\n";
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f << num(c[0](i, j, k)) << " " << num(c[1](i, j, k)) << " " << num(c[2](i, j, k)) << "\n";
    if (pressure) {
        f << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) f << num((*pressure)(i, j, k)) << "\n";
    }
}

}  // namespace slipns::io
