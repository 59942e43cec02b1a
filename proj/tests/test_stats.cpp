#include "homlab/experiment.hpp"
#include "homlab/stats.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

using namespace homlab;

TEST(SummaryTest, KnownValues) {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    const auto s = summarize(xs);
    EXPECT_EQ(s.n, 5);
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.variance, 2.5);
    EXPECT_DOUBLE_EQ(s.stderr_mean, std::sqrt(2.5 / 5.0));
    EXPECT_DOUBLE_EQ(s.min, 1.0);
    EXPECT_DOUBLE_EQ(s.max, 5.0);
    EXPECT_DOUBLE_EQ(s.q50, 3.0);
    EXPECT_DOUBLE_EQ(s.q25, 2.0);
    EXPECT_DOUBLE_EQ(quantile(xs, 0.9), 4.6);
}

TEST(SummaryTest, EmptyAndSingleton) {
    EXPECT_EQ(summarize(std::vector<double>{}).n, 0);
    const auto s = summarize(std::vector<double>{7.0});
    EXPECT_DOUBLE_EQ(s.mean, 7.0);
    EXPECT_DOUBLE_EQ(s.variance, 0.0);
}

TEST(SummaryTest, VarianceStderrMatchesSpreadOfReplicates) {
    SplitMix rng(1);
    std::vector<double> vars, ses;
    for (int r = 0; r < 400; ++r) {
        std::vector<double> xs(200);
        for (auto& x : xs) x = rng.uniform();
        const auto s = summarize(xs);
        vars.push_back(s.variance);
        ses.push_back(s.stderr_variance);
    }
    const auto sv = summarize(vars);
    EXPECT_NEAR(sv.mean, 1.0 / 12.0, 3.0 * sv.stderr_mean);
    EXPECT_NEAR(summarize(ses).mean / sv.sd(), 1.0, 0.15);
}

TEST(FitTest, ExactLine) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = fit_line(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
    EXPECT_FALSE(f.degenerate);
}

TEST(FitTest, ConfidenceIntervalUsesStudentT) {
    const std::vector<double> x{0, 1, 2}, y{0, 2, 1};
    const auto f = fit_line(x, y);
    EXPECT_NEAR(f.slope, 0.5, 1e-12);
    // residuals -0.5, 1, -0.5: s^2 = 1.5, Sxx = 2, se = sqrt(0.75); t(0.975, 1) = 12.7062.
    EXPECT_NEAR(f.slope_se, std::sqrt(0.75), 1e-12);
    EXPECT_NEAR(f.ci_hi - f.slope, 12.7062047 * std::sqrt(0.75), 1e-5);
}

TEST(FitTest, DegenerateInputs) {
    EXPECT_TRUE(fit_line(std::vector<double>{1, 1}, std::vector<double>{2, 3}).degenerate);
    EXPECT_TRUE(fit_line(std::vector<double>{1}, std::vector<double>{2}).degenerate);
    EXPECT_TRUE(fit_line(std::vector<double>{1, 2, NAN}, std::vector<double>{2, 3, 4}).degenerate);
}

TEST(FitTest, MultiFitRecoversCoefficients) {
    std::vector<double> a, b, y;
    for (int i = 0; i < 10; ++i) {
        a.push_back(1.0);
        b.push_back(i);
        y.push_back(3.0 - 0.5 * i);
    }
    const auto f = fit_multi({a, b}, y);
    ASSERT_FALSE(f.degenerate);
    EXPECT_NEAR(f.beta[0], 3.0, 1e-12);
    EXPECT_NEAR(f.beta[1], -0.5, 1e-12);
}

TEST(Seeds, SampleSeedsDependOnAllInputs) {
    const auto e = experiment_id("scaling");
    EXPECT_EQ(sample_seed(1, e, 3), sample_seed(1, e, 3));
    EXPECT_NE(sample_seed(1, e, 3), sample_seed(1, e, 4));
    EXPECT_NE(sample_seed(1, e, 3), sample_seed(2, e, 3));
    EXPECT_NE(sample_seed(1, e, 3), sample_seed(1, experiment_id("duality"), 3));
}

TEST(Pool, ResultsInIndexOrderForAnyWorkerCount) {
    const auto task = [](std::int64_t i) {
        return std::vector<RawRecord>{{0, i, std::uint64_t(i), "x", double(i * i)}};
    };
    const auto one = run_pool(50, 1, task);
    for (int w : {2, 4, 7}) {
        std::atomic<int> done{0};
        const auto many = run_pool(50, w, task, [&](std::int64_t, const auto&) { ++done; });
        EXPECT_EQ(many, one);
        EXPECT_EQ(done.load(), 50);
    }
}

TEST(Records, SortIsStableWithinTask) {
    std::vector<RawRecord> r{{1, 0, 0, "b", 1}, {0, 1, 0, "a", 2}, {0, 0, 0, "z", 3},
                             {0, 0, 0, "a", 4}};
    sort_records(r);
    EXPECT_EQ(r[0].quantity, "z");
    EXPECT_EQ(r[1].quantity, "a");
    EXPECT_EQ(r[2].sample, 1);
    EXPECT_EQ(r[3].cell, 1);
    EXPECT_EQ(select(r, 0, "a"), (std::vector<double>{4, 2}));
}

TEST(Plan, RunTaskTurnsSolverErrorsIntoFailureRecords) {
    ExperimentPlan p;
    p.kind = "t";
    p.samples = 3;
    p.cells = {{"c", {}, -1}};
    p.run = [](int, std::int64_t s, std::uint64_t) -> std::vector<RawRecord> {
        if (s == 1) throw SolverError("no", {1.0});
        return {{0, 0, 0, "v", 1.0}};
    };
    p.summarize = [&](std::span<const RawRecord> r) {
        return summarize_by_cell(p.kind, p.base_seed, p.cells, r);
    };
    const auto recs = run_records(p);
    EXPECT_EQ(count_failures(recs), 1);
    const auto rep = p.summarize(recs);
    EXPECT_EQ(rep.cells[0].quantities.at("v").n, 2);
    EXPECT_FALSE(rep.cells[0].quantities.contains("failure"));
}

TEST(Plan, SamplesPerCellOverride) {
    ExperimentPlan p;
    p.samples = 4;
    p.cells = {{"a", {}, -1}, {"b", {}, 2}};
    EXPECT_EQ(p.tasks().size(), 6u);
    EXPECT_EQ(p.tasks()[4], (std::pair<int, std::int64_t>{1, 0}));
}

TEST(Config, RequireKeysRejectsUnknown) {
    EXPECT_NO_THROW(require_keys({{"a", 1}}, {"a", "b"}, "x"));
    EXPECT_THROW(require_keys({{"c", 1}}, {"a", "b"}, "x"), ConfigError);
}
