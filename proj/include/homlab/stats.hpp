#pragma once

/// @file stats.hpp
/// Sample summaries, regression fits with confidence intervals, raw Monte
/// Carlo records and the in-memory sample pool shared by all experiments.

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace homlab {

struct Summary {
    std::int64_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased
    double stderr_mean = 0.0;
    /// Standard error of the sample variance, sqrt((m4 - s^4 (n-3)/(n-1)) / n).
    double stderr_variance = 0.0;
    double min = 0.0, max = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0, q95 = 0.0;

    double sd() const;
};

Summary summarize(std::span<const double> xs);
/// Linear-interpolated empirical quantile, p in [0, 1].
double quantile(std::vector<double> xs, double p);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  ///< 95% Student-t interval for the slope
    std::int64_t n = 0;
    /// Fewer than two distinct finite points, or non-finite inputs.
    bool degenerate = false;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y, double level = 0.95);

/// Ordinary least squares y ~ X beta; returns beta, standard errors and the
/// two-sided t quantile for `level`.
struct MultiFit {
    std::vector<double> beta;
    std::vector<double> se;
    double t_quantile = 0.0;
    bool degenerate = false;
};

MultiFit fit_multi(const std::vector<std::vector<double>>& columns, std::span<const double> y,
                   double level = 0.95);

// ---------------------------------------------------------------------------

/// One persisted Monte Carlo value.
struct RawRecord {
    int cell = 0;
    std::int64_t sample = 0;
    std::uint64_t seed = 0;
    std::string quantity;
    double value = 0.0;

    friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

/// Sort key (cell, sample, quantity order of emission is preserved by a stable sort).
void sort_records(std::vector<RawRecord>& records);

/// Values of `quantity` in cell `cell`, ordered by sample.
std::vector<double> select(std::span<const RawRecord> records, int cell, const std::string& quantity);

std::uint64_t experiment_id(const std::string& kind);
/// hash(base_seed, experiment_id, sample_index)
std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t experiment, std::int64_t sample);

/// Runs task(i) for i in [0, n) on `workers` threads; results are returned in
/// index order regardless of completion order.
std::vector<std::vector<RawRecord>> run_pool(
    std::int64_t n, int workers, const std::function<std::vector<RawRecord>(std::int64_t)>& task,
    const std::function<void(std::int64_t, const std::vector<RawRecord>&)>& on_done = {});

// ---------------------------------------------------------------------------

struct CellSummary {
    std::string label;
    std::map<std::string, double> params;
    std::map<std::string, Summary> quantities;
};

struct FitReport {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<double> y;
    LinearFit fit;
};

/// Monte Carlo summary of one experiment run.
struct StatReport {
    std::string experiment;
    std::uint64_t base_seed = 0;
    std::vector<CellSummary> cells;
    std::vector<FitReport> fits;
    std::map<std::string, double> scalars;
    std::map<std::string, std::string> notes;
    std::int64_t failures = 0;

    const CellSummary* cell(const std::string& label) const;
    const FitReport* find_fit(const std::string& name) const;
    double scalar(const std::string& key) const;
};

void to_json(nlohmann::json& j, const Summary& s);
void to_json(nlohmann::json& j, const LinearFit& f);
void to_json(nlohmann::json& j, const StatReport& r);

}  // namespace homlab
