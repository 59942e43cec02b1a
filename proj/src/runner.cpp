#include "homlab/runner.hpp"

#include "homlab/analysis.hpp"
#include "homlab/concentration.hpp"
#include "homlab/corrector.hpp"
#include "homlab/green.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace homlab {

namespace fs = std::filesystem;

namespace {

struct KindEntry {
    std::function<std::pair<nlohmann::json, ExperimentPlan>(const nlohmann::json&)> load;
};

template <class Config>
KindEntry entry(ExperimentPlan (*make)(const Config&)) {
    return {[make](const nlohmann::json& j) {
        Config c = j.get<Config>();
        nlohmann::json resolved = c;
        return std::make_pair(resolved, make(c));
    }};
}

const std::map<std::string, KindEntry>& registry() {
    static const std::map<std::string, KindEntry> r{
        {"scaling", entry<ScalingConfig>(&make_scaling_plan)},
        {"dirichlet_checkerboard", entry<DirichletConfig>(&make_dirichlet_plan)},
        {"green_tail", entry<GreenTailConfig>(&make_green_tail_plan)},
        {"green_decay", entry<GreenDecayConfig>(&make_green_decay_plan)},
        {"counterexample", entry<CounterexampleConfig>(&make_counterexample_plan)},
        {"barrier_audit", entry<BarrierAuditConfig>(&make_barrier_audit_plan)},
        {"duality", entry<DualityConfig>(&make_duality_plan)},
        {"regularity", entry<RegularityConfig>(&make_regularity_plan)},
        {"homog_rate", entry<HomogenizationErrorConfig>(&make_homogenization_error_plan)},
        {"sensitivity", entry<SensitivityConfig>(&make_sensitivity_plan)},
        {"concentration_suite", entry<ConcentrationSuiteConfig>(&make_concentration_suite_plan)},
    };
    return r;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ConfigError(where + ": bad number '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') throw ConfigError(where + ": bad integer '" + s + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') throw ConfigError(where + ": bad integer '" + s + "'");
    return v;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, p);
}

std::vector<std::string> param_keys(const ExperimentPlan& plan) {
    std::set<std::string> keys;
    for (const auto& c : plan.cells)
        for (const auto& [k, v] : c.params) keys.insert(k);
    return {keys.begin(), keys.end()};
}

bool in_budget(const LoadedExperiment& e, int cell) {
    return !e.max_cells || cell < *e.max_cells;
}

/// Finished tasks from the journal; a trailing partial task is dropped.
std::map<std::pair<int, std::int64_t>, std::vector<RawRecord>> read_journal(const fs::path& p) {
    std::map<std::pair<int, std::int64_t>, std::vector<RawRecord>> done;
    std::ifstream in(p);
    if (!in) return done;
    std::map<std::pair<int, std::int64_t>, std::vector<RawRecord>> pending;
    std::string line;
    while (std::getline(in, line)) {
        const auto f = split(line, ',');
        try {
            if (f.size() == 6 && f[0] == "R") {
                RawRecord r{int(parse_int(f[1], "journal")), parse_int(f[2], "journal"),
                            parse_uint(f[3], "journal"), f[4], parse_double(f[5], "journal")};
                pending[{r.cell, r.sample}].push_back(std::move(r));
            } else if (f.size() == 3 && f[0] == "D") {
                const std::pair<int, std::int64_t> key{int(parse_int(f[1], "journal")), parse_int(f[2], "journal")};
                done[key] = std::move(pending[key]);
                pending.erase(key);
            }
        } catch (const ConfigError&) {
            // torn line from an interrupted write
        }
    }
    return done;
}

}  // namespace

std::vector<std::string> experiment_kinds() {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

namespace {

LoadedExperiment load_unchecked(const nlohmann::json& document, const RunOptions& options,
                                const std::string& default_name) {
    require_keys(document, {"schema_version", "experiment", "name", "max_cells", "config"}, "config file");
    if (!document.contains("schema_version")) throw ConfigError("config file: missing schema_version");
    if (!document.at("schema_version").is_number_integer() ||
        document.at("schema_version").get<int>() != kSchemaVersion)
        throw ConfigError("config file: unsupported schema_version (expected " +
                          std::to_string(kSchemaVersion) + ")");
    if (!document.contains("experiment") || !document.at("experiment").is_string())
        throw ConfigError("config file: missing experiment kind");
    LoadedExperiment e;
    e.kind = document.at("experiment").get<std::string>();
    const auto it = registry().find(e.kind);
    if (it == registry().end()) {
        std::string known;
        for (const auto& k : experiment_kinds()) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("config file: unknown experiment '" + e.kind + "' (known: " + known + ")");
    }
    e.name = document.value("name", default_name);
    if (e.name.empty() || e.name.find('/') != std::string::npos || e.name == "." || e.name == "..")
        throw ConfigError("config file: name must be a plain directory name");
    if (document.contains("max_cells") && !document.at("max_cells").is_null())
        e.max_cells = document.at("max_cells").get<std::int64_t>();
    if (options.max_cells) e.max_cells = options.max_cells;
    if (e.max_cells && *e.max_cells < 1) throw ConfigError("max_cells must be at least 1");
    nlohmann::json body = document.value("config", nlohmann::json::object());
    if (!body.is_object()) throw ConfigError("config file: config must be an object");
    if (options.seed) body["base_seed"] = *options.seed;
    try {
        auto [resolved, plan] = it->second.load(body);
        e.plan = std::move(plan);
        e.resolved = {{"schema_version", kSchemaVersion},
                      {"experiment", e.kind},
                      {"name", e.name},
                      {"max_cells", e.max_cells ? nlohmann::json(*e.max_cells) : nlohmann::json(nullptr)},
                      {"config", resolved}};
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(e.kind + ": " + ex.what());
    } catch (const DomainError& ex) {
        throw ConfigError(e.kind + ": " + ex.what());
    } catch (const InvalidSpec& ex) {
        throw ConfigError(e.kind + ": " + ex.what());
    }
    return e;
}

}  // namespace

LoadedExperiment load_experiment(const nlohmann::json& document, const RunOptions& options,
                                 const std::string& default_name) {
    try {
        return load_unchecked(document, options, default_name);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config file: ") + ex.what());
    }
}

LoadedExperiment load_experiment_file(const fs::path& path, const RunOptions& options) {
    return load_experiment(read_json(path), options, path.stem().string());
}

fs::path output_root() {
    const char* v = std::getenv(kOutputRootEnv);
    return v && *v ? fs::path(v) : fs::path("runs");
}

// ---------------------------------------------------------------------------

void write_raw_csv(const ExperimentPlan& plan, std::span<const RawRecord> records, std::ostream& os) {
    const auto keys = param_keys(plan);
    os << "cell,sample_index";
    for (const auto& k : keys) os << "," << k;
    os << ",quantity,value,seed\n";
    for (const auto& r : records) {
        const auto& cell = plan.cells.at(std::size_t(r.cell));
        os << cell.label << "," << r.sample;
        for (const auto& k : keys) {
            os << ",";
            const auto p = cell.params.find(k);
            if (p != cell.params.end()) os << g17(p->second);
        }
        os << "," << r.quantity << "," << g17(r.value) << "," << r.seed << "\n";
    }
}

std::vector<RawRecord> read_raw_csv(const ExperimentPlan& plan, std::istream& is) {
    std::map<std::string, int> index;
    for (int c = 0; c < int(plan.cells.size()); ++c) index[plan.cells[std::size_t(c)].label] = c;
    const std::size_t width = param_keys(plan).size() + 5;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("raw.csv: missing header");
    if (split(line, ',').size() != width) throw ConfigError("raw.csv: header does not match the config");
    std::vector<RawRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != width) throw ConfigError("raw.csv: bad row '" + line + "'");
        const auto c = index.find(f[0]);
        if (c == index.end()) throw ConfigError("raw.csv: unknown cell '" + f[0] + "'");
        out.push_back({c->second, parse_int(f[1], "raw.csv"), parse_uint(f[width - 1], "raw.csv"),
                       f[width - 3], parse_double(f[width - 2], "raw.csv")});
    }
    return out;
}

std::string summary_text(const StatReport& report) {
    nlohmann::json j = report;
    return j.dump(2) + "\n";
}

RunResult run_experiment(const LoadedExperiment& e, const fs::path& dir, int workers) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path resolved_path = dir / "resolved_config.json";
    if (fs::exists(resolved_path)) {
        if (read_json(resolved_path) != e.resolved)
            throw ConfigError("run directory " + dir.string() + " holds a different resolved config");
    }
    fs::create_directories(dir);
    if (!fs::exists(resolved_path)) write_text(resolved_path, e.resolved.dump(2) + "\n");

    const fs::path journal_path = dir / "journal.csv";
    auto done = read_journal(journal_path);
    std::vector<std::pair<int, std::int64_t>> todo;
    RunResult res;
    res.dir = dir;
    for (const auto& t : e.plan.tasks()) {
        if (!in_budget(e, t.first)) continue;
        ++res.tasks_total;
        if (done.contains(t)) ++res.tasks_resumed;
        else todo.push_back(t);
    }

    {
        std::ofstream journal(journal_path, std::ios::app | std::ios::binary);
        if (!journal) throw Error("cannot open " + journal_path.string());
        auto parts = run_pool(
            std::int64_t(todo.size()), workers,
            [&](std::int64_t i) { return run_task(e.plan, todo[std::size_t(i)].first, todo[std::size_t(i)].second); },
            [&](std::int64_t i, const std::vector<RawRecord>& recs) {
                // run_pool serializes completion callbacks
                const auto [cell, sample] = todo[std::size_t(i)];
                std::ostringstream block;
                for (const auto& r : recs)
                    block << "R," << r.cell << "," << r.sample << "," << r.seed << "," << r.quantity << ","
                          << g17(r.value) << "\n";
                block << "D," << cell << "," << sample << "\n";
                journal << block.str();
                journal.flush();
            });
        for (std::size_t i = 0; i < todo.size(); ++i) done[todo[i]] = std::move(parts[i]);
    }

    std::vector<RawRecord> records;
    for (auto& [key, recs] : done)
        if (in_budget(e, key.first)) records.insert(records.end(), recs.begin(), recs.end());
    sort_records(records);

    std::ostringstream raw;
    write_raw_csv(e.plan, records, raw);
    write_text(dir / "raw.csv", raw.str());
    res.report = e.plan.summarize(records);
    write_text(dir / "summary.json", summary_text(res.report));
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json info = {{"experiment", e.kind},
                           {"name", e.name},
                           {"schema_version", kSchemaVersion},
                           {"workers", workers},
                           {"tasks_total", res.tasks_total},
                           {"tasks_resumed", res.tasks_resumed},
                           {"tasks_computed", res.tasks_total - res.tasks_resumed},
                           {"failures", res.report.failures},
                           {"records", records.size()},
                           {"wall_seconds", res.seconds}};
    write_text(dir / "run_info.json", info.dump(2) + "\n");
    return res;
}

StatReport regenerate_report(const fs::path& dir) {
    const auto e = load_experiment(read_json(dir / "resolved_config.json"));
    std::ifstream in(dir / "raw.csv");
    if (!in) throw ConfigError("missing " + (dir / "raw.csv").string());
    const auto records = read_raw_csv(e.plan, in);
    return e.plan.summarize(records);
}

void print_report(const StatReport& report, std::ostream& os) {
    os << "experiment " << report.experiment << "  base_seed " << report.base_seed << "  failures "
       << report.failures << "\n";
    for (const auto& c : report.cells) {
        os << "cell " << c.label << "\n";
        for (const auto& [q, s] : c.quantities)
            os << "  " << q << "  n=" << s.n << "  mean=" << g17(s.mean) << "  sd=" << g17(s.sd())
               << "  stderr=" << g17(s.stderr_mean) << "\n";
    }
    for (const auto& f : report.fits)
        os << "fit " << f.name << "  slope=" << g17(f.fit.slope) << "  ci=[" << g17(f.fit.ci_lo) << ", "
           << g17(f.fit.ci_hi) << "]" << (f.fit.degenerate ? "  degenerate" : "") << "\n";
    for (const auto& [k, v] : report.scalars) os << "scalar " << k << " = " << g17(v) << "\n";
}

void write_plot_data(const StatReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::set<std::string> keys;
    for (const auto& c : report.cells)
        for (const auto& [k, v] : c.params) keys.insert(k);
    {
        std::ostringstream os;
        os << "# cell";
        for (const auto& k : keys) os << " " << k;
        os << " quantity n mean sd stderr\n";
        for (const auto& c : report.cells)
            for (const auto& [q, s] : c.quantities) {
                os << c.label;
                for (const auto& k : keys) {
                    const auto p = c.params.find(k);
                    os << " " << (p == c.params.end() ? std::string("nan") : g17(p->second));
                }
                os << " " << q << " " << s.n << " " << g17(s.mean) << " " << g17(s.sd()) << " "
                   << g17(s.stderr_mean) << "\n";
            }
        write_text(out_dir / "cells.dat", os.str());
    }
    {
        std::ostringstream os;
        os << "# key value\n";
        for (const auto& [k, v] : report.scalars) os << k << " " << g17(v) << "\n";
        write_text(out_dir / "scalars.dat", os.str());
    }
    const FitReport* scale_fit = nullptr;
    for (const auto& f : report.fits) {
        std::ostringstream os;
        os << "# x y fit  (x = " << f.x_label << ", y = " << f.y_label << ")\n";
        for (std::size_t i = 0; i < f.x.size(); ++i)
            os << g17(f.x[i]) << " " << g17(f.y[i]) << " " << g17(f.fit.intercept + f.fit.slope * f.x[i]) << "\n";
        write_text(out_dir / ("fit_" + f.name + ".dat"), os.str());
        if (f.name.find("scale") != std::string::npos && !scale_fit) scale_fit = &f;
    }
    const bool eps_sweep = !report.cells.empty() && report.cells.front().params.contains("eps") &&
                           report.cells.front().params.contains("scale");
    if (eps_sweep) {
        std::ostringstream os;
        os << "# eps E_eps sd fit\n";
        const bool variance = scale_fit && scale_fit->y_label.find("var") != std::string::npos;
        for (const auto& c : report.cells) {
            const double eps = c.params.at("eps");
            const double E = c.params.at("scale");
            const auto q = c.quantities.find("value");
            const double sd = q == c.quantities.end() ? std::nan("") : q->second.sd();
            double fit = std::nan("");
            if (scale_fit) {
                const double x = std::log(variance ? E * E : E);
                const double y = scale_fit->fit.intercept + scale_fit->fit.slope * x;
                fit = variance ? std::exp(0.5 * y) : std::exp(y);
            }
            os << g17(eps) << " " << g17(E) << " " << g17(sd) << " " << g17(fit) << "\n";
        }
        write_text(out_dir / "scaling.dat", os.str());
    }
}

}  // namespace homlab
