#pragma once

/// @file runner.hpp
/// Config ingestion, journaled resumable runs, raw CSV / summary persistence
/// and plot-table emission behind the command-line tool.

#include "homlab/experiment.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homlab {

inline constexpr int kSchemaVersion = 1;
/// Environment variable naming the directory that holds run directories.
inline constexpr const char* kOutputRootEnv = "HOMLAB_OUTPUT_ROOT";

struct RunOptions {
    int workers = 1;
    std::optional<std::uint64_t> seed;       ///< replaces config.base_seed
    std::optional<std::int64_t> max_cells;   ///< run only the first N sweep cells
};

/// A validated experiment with every default materialized in `resolved`.
struct LoadedExperiment {
    std::string kind;
    std::string name;
    std::optional<std::int64_t> max_cells;
    nlohmann::json resolved;
    ExperimentPlan plan;
};

std::vector<std::string> experiment_kinds();

/// Top-level keys: schema_version (required), experiment (required), name,
/// max_cells, config.  Throws ConfigError on any schema violation.
LoadedExperiment load_experiment(const nlohmann::json& document, const RunOptions& options = {},
                                 const std::string& default_name = "run");
/// Parses the file; the default name is the file stem.
LoadedExperiment load_experiment_file(const std::filesystem::path& path,
                                      const RunOptions& options = {});

/// $HOMLAB_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path output_root();

struct RunResult {
    std::filesystem::path dir;
    StatReport report;
    std::int64_t tasks_total = 0;
    std::int64_t tasks_resumed = 0;
    double seconds = 0.0;
};

/// Runs the tasks missing from dir/journal.csv, appending each finished task
/// to the journal, then writes raw.csv, summary.json and run_info.json.  A
/// directory holding a different resolved config throws ConfigError.
RunResult run_experiment(const LoadedExperiment& experiment, const std::filesystem::path& dir,
                         int workers = 1);

/// Columns cell, sample_index, one per param key, quantity, value, seed.
void write_raw_csv(const ExperimentPlan& plan, std::span<const RawRecord> records, std::ostream& os);
std::vector<RawRecord> read_raw_csv(const ExperimentPlan& plan, std::istream& is);

/// Summary recomputed from dir/resolved_config.json and dir/raw.csv.
StatReport regenerate_report(const std::filesystem::path& dir);
/// Pretty JSON text of a summary, as written to summary.json.
std::string summary_text(const StatReport& report);
/// Human-readable scalars and fits.
void print_report(const StatReport& report, std::ostream& os);

/// Whitespace-delimited tables in out_dir: cells.dat, scalars.dat, one
/// fit_<name>.dat per fit and, for eps sweeps, scaling.dat.
void write_plot_data(const StatReport& report, const std::filesystem::path& out_dir);

}  // namespace homlab
