/// Command-line front end: run, report and plotdata over run directories.

#include "homlab/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMismatch = 3;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace homlab;
    CLI::App app{"Monte Carlo experiments for random nondivergence-form elliptic equations"};
    app.require_subcommand(1);

    std::string config_path;
    RunOptions options;
    std::int64_t seed = -1;
    std::int64_t max_cells = 0;
    auto* run = app.add_subcommand("run", "Run (or resume) the experiment described by a config file");
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--workers,-j", options.workers, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Override config.base_seed")->check(CLI::NonNegativeNumber);
    run->add_option("--max-cells", max_cells, "Run only the first N sweep cells")->check(CLI::PositiveNumber);

    std::string run_dir;
    auto* report = app.add_subcommand("report", "Recompute the summary of a run directory from raw.csv");
    report->add_option("run-dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    auto* plot = app.add_subcommand("plotdata", "Write plot tables into <run-dir>/plot");
    plot->add_option("run-dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            if (seed >= 0) options.seed = std::uint64_t(seed);
            if (max_cells > 0) options.max_cells = max_cells;
            const auto experiment = load_experiment_file(config_path, options);
            const auto dir = output_root() / experiment.name;
            const auto res = run_experiment(experiment, dir, options.workers);
            std::cout << "run directory " << res.dir.string() << "\n"
                      << "tasks " << res.tasks_total << " (resumed " << res.tasks_resumed << ")  failures "
                      << res.report.failures << "  wall " << res.seconds << " s\n";
            print_report(res.report, std::cout);
            return 0;
        }
        const std::filesystem::path dir(run_dir);
        const auto rep = regenerate_report(dir);
        if (*report) {
            print_report(rep, std::cout);
            const auto stored = dir / "summary.json";
            if (std::filesystem::exists(stored) && slurp(stored) != summary_text(rep)) {
                std::cerr << "summary.json differs from the summary recomputed from raw.csv\n";
                return kExitMismatch;
            }
            return 0;
        }
        write_plot_data(rep, dir / "plot");
        std::cout << "plot tables written to " << (dir / "plot").string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
