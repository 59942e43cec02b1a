#pragma once

/// @file experiment.hpp
/// A Monte Carlo experiment as cells x samples of independent tasks plus a
/// pure summarizer over the raw records.

#include "homlab/common.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace homlab {

struct ExperimentCell {
    std::string label;
    std::map<std::string, double> params;
    /// Samples for this cell; negative means the plan default.
    std::int64_t samples = -1;
};

struct ExperimentPlan {
    std::string kind;
    std::uint64_t base_seed = 0;
    std::int64_t samples = 0;
    std::vector<ExperimentCell> cells;
    /// Records for one (cell, sample); `seed` is shared by all cells of a sample.
    std::function<std::vector<RawRecord>(int cell, std::int64_t sample, std::uint64_t seed)> run;
    std::function<StatReport(std::span<const RawRecord>)> summarize;

    std::int64_t samples_in(int cell) const;
    /// Task t -> (cell, sample) in cell-major order.
    std::vector<std::pair<int, std::int64_t>> tasks() const;
    std::uint64_t seed_for(std::int64_t sample) const;
};

/// Runs one task; solver failures become a single "failure" record so that
/// the run continues.
std::vector<RawRecord> run_task(const ExperimentPlan& plan, int cell, std::int64_t sample);

/// All tasks in memory, merged in (cell, sample) order.
std::vector<RawRecord> run_records(const ExperimentPlan& plan, int workers = 1);
StatReport run_in_memory(const ExperimentPlan& plan, int workers = 1);

/// Count of "failure" records.
std::int64_t count_failures(std::span<const RawRecord> records);

/// Strict key check for config objects.
void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& where);

/// Per-cell summaries of every quantity except "failure".
StatReport summarize_by_cell(const std::string& kind, std::uint64_t base_seed,
                             const std::vector<ExperimentCell>& cells,
                             std::span<const RawRecord> records);

/// A field of the summary of `quantity`, or `fallback` when the cell has none.
double summary_field(const CellSummary& c, const std::string& quantity, double Summary::*field,
                     double fallback);

/// d x d nested array.
SymMatrix matrix_from(const nlohmann::json& j, int d, const std::string& where);
nlohmann::json matrix_json(const SymMatrix& M);

}  // namespace homlab
