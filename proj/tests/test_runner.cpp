#include "homlab/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace homlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json suite_doc(std::int64_t samples = 40) {
    return {{"schema_version", 1},
            {"experiment", "concentration_suite"},
            {"config", {{"samples", samples}, {"base_seed", 5}}}};
}

nlohmann::json scaling_doc() {
    return {{"schema_version", 1},
            {"experiment", "scaling"},
            {"name", "tiny"},
            {"config",
             {{"field", {{"kind", "scalar_checkerboard"}, {"dimension", 2}, {"values", {1, 4}}}},
              {"eps", {0.25, 0.125, 0.0625}},
              {"samples", 3},
              {"corrector", {{"h", 1.0}, {"box_factor", 3}}}}}};
}

class RunnerTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("homlab_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

}  // namespace

TEST(Schema, RejectsMalformedDocuments) {
    EXPECT_THROW(load_experiment({{"experiment", "scaling"}}), ConfigError);
    EXPECT_THROW(load_experiment({{"schema_version", 2}, {"experiment", "duality"}}), ConfigError);
    EXPECT_THROW(load_experiment({{"schema_version", 1}, {"experiment", "nope"}}), ConfigError);
    EXPECT_THROW(load_experiment({{"schema_version", 1}, {"experiment", "scaling"}, {"config", {}}}),
                 ConfigError);
    auto d = suite_doc();
    d["extra"] = true;
    EXPECT_THROW(load_experiment(d), ConfigError);
    d = suite_doc();
    d["config"]["samples"] = "many";
    EXPECT_THROW(load_experiment(d), ConfigError);
    d = scaling_doc();
    d["config"]["field"]["values"] = {-1, 4};
    EXPECT_THROW(load_experiment(d), ConfigError);
    d = suite_doc();
    d["max_cells"] = 0;
    EXPECT_THROW(load_experiment(d), ConfigError);
}

TEST(Schema, EveryKindResolvesIdempotently) {
    const nlohmann::json field2 = {{"kind", "scalar_checkerboard"}, {"dimension", 2}, {"values", {1, 4}}};
    const nlohmann::json field3 = {{"kind", "scalar_checkerboard"}, {"dimension", 3}, {"values", {1, 4}}};
    const std::map<std::string, nlohmann::json> configs{
        {"scaling", {{"field", field2}, {"eps", {0.25, 0.125, 0.0625}}}},
        {"dirichlet_checkerboard", {{"field", field2}, {"eps", {0.25, 0.125, 0.0625}}}},
        {"green_tail", {{"field", field3}}},
        {"green_decay", {{"field", field3}}},
        {"counterexample", nlohmann::json::object()},
        {"barrier_audit", {{"field", field3}}},
        {"duality", {{"field", field2}}},
        {"regularity", {{"field", field2}}},
        {"homog_rate", {{"field", field2}, {"ahom_samples", 2}}},
        {"sensitivity", nlohmann::json::object()},
        {"concentration_suite", nlohmann::json::object()}};
    EXPECT_EQ(experiment_kinds().size(), configs.size());
    for (const auto& kind : experiment_kinds()) {
        ASSERT_TRUE(configs.contains(kind)) << kind;
        const nlohmann::json doc = {{"schema_version", 1}, {"experiment", kind}, {"config", configs.at(kind)}};
        const auto a = load_experiment(doc);
        EXPECT_EQ(a.kind, kind);
        const auto b = load_experiment(a.resolved);
        EXPECT_EQ(a.resolved, b.resolved) << kind;
        EXPECT_FALSE(a.plan.cells.empty()) << kind;
    }
}

TEST(Schema, SeedOverrideAndMaxCells) {
    RunOptions o;
    o.seed = 77;
    o.max_cells = 1;
    const auto e = load_experiment(suite_doc(), o);
    EXPECT_EQ(e.resolved["config"]["base_seed"], 77);
    EXPECT_EQ(e.plan.base_seed, 77u);
    EXPECT_EQ(e.max_cells, 1);
}

TEST(Csv, RawRoundTrip) {
    const auto e = load_experiment(scaling_doc());
    const std::vector<RawRecord> recs{{0, 0, 11, "value", 1.0 / 3.0}, {2, 1, 12, "value", -2.5e-17}};
    std::stringstream ss;
    write_raw_csv(e.plan, recs, ss);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "cell,sample_index,eps,scale,quantity,value,seed")
        << text;
    EXPECT_EQ(read_raw_csv(e.plan, ss), recs);
}

TEST_F(RunnerTest, WorkerCountDoesNotChangeOutputs) {
    const auto e = load_experiment(suite_doc());
    const auto r1 = run_experiment(e, dir_ / "w1", 1);
    const auto r3 = run_experiment(e, dir_ / "w3", 3);
    EXPECT_EQ(slurp(dir_ / "w1" / "raw.csv"), slurp(dir_ / "w3" / "raw.csv"));
    EXPECT_EQ(slurp(dir_ / "w1" / "summary.json"), slurp(dir_ / "w3" / "summary.json"));
    EXPECT_EQ(r1.tasks_total, 3 * 40);
    EXPECT_TRUE(fs::exists(dir_ / "w1" / "run_info.json"));
    EXPECT_TRUE(fs::exists(dir_ / "w1" / "resolved_config.json"));
}

TEST_F(RunnerTest, ResumeAfterTruncatedJournalMatchesUninterruptedRun) {
    const auto e = load_experiment(suite_doc());
    run_experiment(e, dir_ / "full", 1);
    run_experiment(e, dir_ / "cut", 1);
    const auto journal = dir_ / "cut" / "journal.csv";
    std::string text = slurp(journal);
    text = text.substr(0, text.size() / 2);  // ends mid-task, possibly mid-line
    std::ofstream(journal, std::ios::binary | std::ios::trunc) << text;
    fs::remove(dir_ / "cut" / "raw.csv");
    fs::remove(dir_ / "cut" / "summary.json");
    const auto r = run_experiment(e, dir_ / "cut", 2);
    EXPECT_GT(r.tasks_resumed, 0);
    EXPECT_LT(r.tasks_resumed, r.tasks_total);
    EXPECT_EQ(slurp(dir_ / "full" / "raw.csv"), slurp(dir_ / "cut" / "raw.csv"));
    EXPECT_EQ(slurp(dir_ / "full" / "summary.json"), slurp(dir_ / "cut" / "summary.json"));
}

TEST_F(RunnerTest, RegeneratedSummaryIsIdentical) {
    const auto e = load_experiment(suite_doc());
    run_experiment(e, dir_, 1);
    EXPECT_EQ(summary_text(regenerate_report(dir_)), slurp(dir_ / "summary.json"));
}

TEST_F(RunnerTest, DifferentConfigInSameDirectoryIsRejected) {
    run_experiment(load_experiment(suite_doc(40)), dir_, 1);
    EXPECT_THROW(run_experiment(load_experiment(suite_doc(41)), dir_, 1), ConfigError);
}

TEST_F(RunnerTest, MaxCellsRunsLeadingCellsOnly) {
    RunOptions o;
    o.max_cells = 1;
    const auto r = run_experiment(load_experiment(scaling_doc(), o), dir_, 1);
    std::ifstream in(dir_ / "raw.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.substr(0, line.find(',')), "eps=0.25") << line;
    }
    EXPECT_EQ(rows, 3 * 2);
    EXPECT_EQ(r.tasks_total, 3);
}

TEST_F(RunnerTest, PlotDataTables) {
    const auto r = run_experiment(load_experiment(scaling_doc()), dir_ / "run", 1);
    write_plot_data(r.report, dir_ / "plot");
    for (const char* f : {"cells.dat", "scalars.dat", "scaling.dat", "fit_sd_vs_scale.dat"})
        EXPECT_TRUE(fs::exists(dir_ / "plot" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "plot" / "scaling.dat").substr(0, 1), "#");
    StatReport empty;
    write_plot_data(empty, dir_ / "empty");
    EXPECT_TRUE(fs::exists(dir_ / "empty" / "cells.dat"));
    std::ostringstream os;
    print_report(r.report, os);
    EXPECT_NE(os.str().find("sd_vs_scale"), std::string::npos);
}

TEST(OutputRoot, EnvironmentOverride) {
    ::setenv(kOutputRootEnv, "/tmp/somewhere", 1);
    EXPECT_EQ(output_root(), fs::path("/tmp/somewhere"));
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(output_root(), fs::path("runs"));
}
