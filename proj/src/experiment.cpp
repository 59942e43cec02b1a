#include "homlab/experiment.hpp"

#include "homlab/common.hpp"

#include <map>
#include <set>

namespace homlab {

std::int64_t ExperimentPlan::samples_in(int cell) const {
    const auto s = cells.at(std::size_t(cell)).samples;
    return s >= 0 ? s : samples;
}

std::vector<std::pair<int, std::int64_t>> ExperimentPlan::tasks() const {
    std::vector<std::pair<int, std::int64_t>> out;
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        for (std::int64_t s = 0; s < samples_in(c); ++s) out.emplace_back(c, s);
    return out;
}

std::uint64_t ExperimentPlan::seed_for(std::int64_t sample) const {
    return sample_seed(base_seed, experiment_id(kind), sample);
}

std::vector<RawRecord> run_task(const ExperimentPlan& plan, int cell, std::int64_t sample) {
    const std::uint64_t seed = plan.seed_for(sample);
    try {
        auto recs = plan.run(cell, sample, seed);
        for (auto& r : recs) {
            r.cell = cell;
            r.sample = sample;
            r.seed = seed;
        }
        return recs;
    } catch (const SolverError&) {
        return {RawRecord{cell, sample, seed, "failure", 1.0}};
    }
}

std::vector<RawRecord> run_records(const ExperimentPlan& plan, int workers) {
    const auto tasks = plan.tasks();
    auto parts = run_pool(static_cast<std::int64_t>(tasks.size()), workers, [&](std::int64_t t) {
        return run_task(plan, tasks[std::size_t(t)].first, tasks[std::size_t(t)].second);
    });
    std::vector<RawRecord> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    sort_records(all);
    return all;
}

StatReport run_in_memory(const ExperimentPlan& plan, int workers) {
    const auto recs = run_records(plan, workers);
    return plan.summarize(recs);
}

std::int64_t count_failures(std::span<const RawRecord> records) {
    std::int64_t n = 0;
    for (const auto& r : records)
        if (r.quantity == "failure") ++n;
    return n;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.contains(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

StatReport summarize_by_cell(const std::string& kind, std::uint64_t base_seed,
                             const std::vector<ExperimentCell>& cells,
                             std::span<const RawRecord> records) {
    StatReport rep;
    rep.experiment = kind;
    rep.base_seed = base_seed;
    rep.failures = count_failures(records);
    for (int c = 0; c < int(cells.size()); ++c) {
        CellSummary cs{cells[std::size_t(c)].label, cells[std::size_t(c)].params, {}};
        std::map<std::string, std::vector<double>> by;
        for (const auto& r : records)
            if (r.cell == c && r.quantity != "failure") by[r.quantity].push_back(r.value);
        for (auto& [q, v] : by) cs.quantities[q] = summarize(v);
        rep.cells.push_back(std::move(cs));
    }
    return rep;
}

double summary_field(const CellSummary& c, const std::string& quantity, double Summary::*field,
                     double fallback) {
    const auto it = c.quantities.find(quantity);
    return it == c.quantities.end() ? fallback : it->second.*field;
}

SymMatrix matrix_from(const nlohmann::json& j, int d, const std::string& where) {
    if (!j.is_array() || int(j.size()) != d) throw ConfigError(where + ": expected a d x d array");
    SymMatrix M(d, d);
    for (int i = 0; i < d; ++i) {
        if (!j[std::size_t(i)].is_array() || int(j[std::size_t(i)].size()) != d)
            throw ConfigError(where + ": expected a d x d array");
        for (int k = 0; k < d; ++k) M(i, k) = j[std::size_t(i)][std::size_t(k)].get<double>();
    }
    return M;
}

nlohmann::json matrix_json(const SymMatrix& M) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < M.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        a.push_back(row);
    }
    return a;
}

}  // namespace homlab
