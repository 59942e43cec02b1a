#include "homlab/corrector.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace homlab;

namespace {

SymMatrix eye(int d) { return SymMatrix::Identity(d, d); }

}  // namespace

TEST(Scales, ErrorScaleByDimension) {
    const double e = 0.125, L = std::log(8.0);
    EXPECT_DOUBLE_EQ(error_scale(e, 2), e * L);
    EXPECT_DOUBLE_EQ(error_scale(e, 3), std::pow(e, 1.5));
    EXPECT_DOUBLE_EQ(error_scale(e, 4), e * e * std::sqrt(L));
    EXPECT_DOUBLE_EQ(error_scale(e, 5), e * e);
    EXPECT_THROW(error_scale(0.6, 2), DomainError);
    EXPECT_THROW(error_scale(0.0, 2), DomainError);
}

TEST(Scales, ScreeningRateAndTruncationRadius) {
    EXPECT_DOUBLE_EQ(screening_rate(2.0), 0.5);
    // a = 1/2, eps = 1/4: (2 / (1/8)) log(16 * 1e6) = 16 * 16.588 = 265.4
    EXPECT_DOUBLE_EQ(truncation_radius(0.25, 2.0, 1e-6), 266.0);
    EXPECT_THROW(truncation_radius(0.25, 2.0, 0.0), DomainError);
}

TEST(Scales, SolverRadiusRoundsUpToCoarsenableMultiple) {
    EXPECT_DOUBLE_EQ(solver_radius(10.0, 1.0), 16.0);
    EXPECT_DOUBLE_EQ(solver_radius(16.0, 1.0), 16.0);
    EXPECT_DOUBLE_EQ(solver_radius(40.0, 0.5), 40.0);
    EXPECT_DOUBLE_EQ(solver_radius(100.0, 1.0), 112.0);
    CorrectorOptions o;
    o.h = 0.5;
    o.box_factor = 6.0;
    EXPECT_DOUBLE_EQ(o.radius_for(0.25, 4.0), 24.0);
}

TEST(Corrector, ConstantFieldGivesTraceExactly) {
    for (int d : {2}) {
        for (double eps : {0.25, 0.0625}) {
            const auto spec = FieldSpec::constant(d, 1.0);
            const MatrixField f(spec, sample_environment(spec, 1));
            CorrectorOptions o;
            o.h = 1.0;
            const auto sol = approximate_corrector(CorrectorProblem(f, eye(d), eps, o));
            EXPECT_NEAR(sol.center_value, double(d), 1e-6) << "d=" << d << " eps=" << eps;
        }
    }
}

TEST(Corrector, MatchingBoundaryValueIsExactOnSmallBoxes) {
    const auto spec = FieldSpec::constant(2, 3.0);
    const MatrixField f(spec, sample_environment(spec, 1));
    CorrectorOptions o;
    o.h = 0.5;
    o.box_radius = 4.0;
    o.boundary_value = 6.0;
    o.solve_tol = 1e-12;
    const auto sol = approximate_corrector(CorrectorProblem(f, eye(2), 0.25, o));
    for (double v : sol.phi.values) ASSERT_NEAR(0.0625 * v, 6.0, 1e-9);
}

TEST(Corrector, LinearInM) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 7));
    CorrectorOptions o;
    o.box_factor = 6.0;
    o.solve_tol = 1e-12;
    const CorrectorSystem sys(f, 0.25, o);
    SymMatrix M1 = eye(2), M2(2, 2);
    M2 << 0.2, -0.3, -0.3, 0.5;
    const double a = sys.solve(M1).center_value, b = sys.solve(M2).center_value;
    const double c = sys.solve(0.5 * (M1 + M2)).center_value;
    EXPECT_NEAR(c, 0.5 * (a + b), 1e-9);
}

TEST(Corrector, CheckerboardValueWithinEllipticityBounds) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    CorrectorOptions o;
    o.box_factor = 8.0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const MatrixField f(spec, sample_environment(spec, s));
        const double v = approximate_corrector(CorrectorProblem(f, eye(2), 0.125, o)).center_value;
        EXPECT_GT(v, 2.0 * 1.0 - 1e-3);
        EXPECT_LT(v, 2.0 * 4.0);
    }
}

TEST(Corrector, RejectsBadInputs) {
    const auto spec = FieldSpec::constant(2, 1.0);
    const MatrixField f(spec, sample_environment(spec, 1));
    EXPECT_THROW(CorrectorProblem(f, 2.0 * eye(2), 0.25).validate(), DomainError);
    EXPECT_THROW(CorrectorProblem(f, eye(3), 0.25).validate(), DomainError);
    EXPECT_THROW(CorrectorProblem(f, eye(2), 0.75).validate(), DomainError);
    CorrectorOptions o;
    o.box_radius = 4000.0;
    o.memory_budget_mb = 10.0;
    EXPECT_THROW(approximate_corrector(CorrectorProblem(f, eye(2), 0.25, o)), ResourceBudgetError);
}

TEST(Corrector, AhomOfConstantFieldIsTheConstant) {
    FieldSpec spec;
    spec.kind = FieldKind::full_symmetric;
    spec.dimension = 2;
    spec.lambda = 2.0;
    spec.Lambda = 2.0;
    CorrectorOptions o;
    o.h = 1.0;
    o.box_radius = 64.0;
    const auto est = ahom_estimate(spec, 0.5, 2, 3, o);
    EXPECT_NEAR(est.matrix(0, 0), 2.0, 1e-4);
    EXPECT_NEAR(est.matrix(1, 1), 2.0, 1e-4);
    EXPECT_NEAR(est.matrix(0, 1), 0.0, 1e-4);
}

TEST(Corrector, DifferenceSatisfiesItsEquation) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 2));
    CorrectorOptions o;
    o.box_factor = 4.0;
    o.solve_tol = 1e-12;
    const auto d = corrector_difference(f, eye(2), 0.125, o);
    EXPECT_LT(d.residual, 1e-8);
    EXPECT_GT(d.inner_radius, 0.0);
}

TEST(Experiments, ScalingRecordsIndependentOfWorkers) {
    ScalingConfig c;
    c.field = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    c.eps = {0.25, 0.125, 0.0625};
    c.samples = 4;
    c.corrector.box_factor = 4.0;
    const auto plan = make_scaling_plan(c);
    EXPECT_EQ(run_records(plan, 1), run_records(plan, 3));
    const auto rep = run_in_memory(plan, 2);
    ASSERT_EQ(rep.cells.size(), 3u);
    EXPECT_TRUE(rep.find_fit("sd_vs_scale") != nullptr);
}

TEST(Experiments, ScalingConfigJsonRoundTrip) {
    nlohmann::json j = {{"field", {{"kind", "scalar_checkerboard"}, {"values", {1, 4}}}},
                        {"eps", {0.25, 0.125, 0.0625}},
                        {"corrector", {{"h", 1.0}, {"box_factor", 4}}}};
    const auto c = j.get<ScalingConfig>();
    const nlohmann::json back = c;
    EXPECT_EQ(nlohmann::json(back.get<ScalingConfig>()), back);
    j["eps"] = {0.25, 0.125};
    EXPECT_ANY_THROW(j.get<ScalingConfig>());
    j["eps"] = {0.25, 0.125, 0.0625};
    j["typo"] = 1;
    EXPECT_THROW(j.get<ScalingConfig>(), ConfigError);
}
