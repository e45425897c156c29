// SPDX-License-Identifier: Apache-2.0
// Batch front door: run <config>, list-checks, export <run-dir>.
#include <CLI11.hpp>
#include <iostream>

#include "slipns/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Slip-channel Navier-Stokes pressure and regularity harness"};
    app.require_subcommand(1);

    std::string config_path, run_dir;
    auto* run_cmd = app.add_subcommand("run", "Run the pipeline and the selected checks of a config");
    run_cmd->add_option("config", config_path, "INI experiment config")->required();
    auto* list_cmd = app.add_subcommand("list-checks", "Print the acceptance checks and the anchors they verify");
    auto* export_cmd = app.add_subcommand("export", "Write the VTK series of a finished run");
    export_cmd->add_option("run-dir", run_dir, "Directory written by 'run'")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list_cmd) {
            std::cout << slipns::list_checks();
            return 0;
        }
        if (*run_cmd) {
            const slipns::ExperimentConfig c = slipns::load_config(config_path);
            (void)slipns::resolve_threads();
            const auto dir = slipns::resolve_output_dir(c);
            const slipns::RunReport r = slipns::run(c, dir);
            std::cout << r.text << "artifacts in " << dir.string() << "\n";
            return r.passed ? 0 : 1;
        }
        if (*export_cmd) {
            const int n = slipns::export_run(run_dir);
            std::cout << "wrote " << n << " VTK files to " << (std::filesystem::path(run_dir) / "vtk").string() << "\n";
            return 0;
        }
    } catch (const slipns::config_error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
