// Command-line driver. One subcommand per study; every run writes one
// long-form CSV and one companion plot script into the output directory and
// prints the check report. Exit codes: 0 all checks pass, 1 a check failed,
// 2 usage or configuration problem (including geometry the guards reject).

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "impbond/studies.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Boundary-integral solver for imperfectly bonded inclusions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--out", out_dir, "output directory (default: config's out key)");
    app.add_option("--threads", threads, "worker threads for parameter sweeps");
    app.add_option("--override", overrides, "replace a scalar config key, e.g. gamma='0 0.1'");

    app.add_subcommand("verify", "run the operator and solver identity suite");
    app.add_subcommand("capacitance", "tabulate the resistive capacitance matrix");
    app.add_subcommand("convergence", "gamma -> 0 convergence rates");
    app.add_subcommand("blowup", "two-disk (gamma, eps) gradient regime map");
    app.add_subcommand("solve", "solve one configuration and dump the field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    const std::string study = app.get_subcommands().front()->get_name();
    try {
        impbond::ExperimentConfig cfg = impbond::load_config(config_path, overrides);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads > 0) cfg.threads = threads;

        const impbond::StudyReport rep = impbond::run_study(study, cfg);

        std::filesystem::create_directories(cfg.out_dir);
        const std::string csv_path = cfg.out_dir + "/" + study + ".csv";
        impbond::write_file(csv_path, impbond::format_csv(rep.rows));
        const std::string plot_path = cfg.out_dir + "/plot_" + study + ".py";
        if (!rep.plot_script.empty()) impbond::write_file(plot_path, rep.plot_script);

        for (const auto& line : rep.lines) std::cout << line << "\n";
        std::cout << study << ": " << rep.rows.size() << " rows, " << rep.failures
                  << " failed checks, " << rep.warnings << " warnings\n";
        std::cout << "wrote " << csv_path << "\n";
        if (!rep.plot_script.empty()) std::cout << "wrote " << plot_path << "\n";
        return rep.failures == 0 ? 0 : 1;
    } catch (const impbond::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const impbond::guard_error& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
