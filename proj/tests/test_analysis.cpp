#include "homlab/analysis.hpp"
#include "homlab/lp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace homlab;

namespace {

Point zero2() { return Point::Zero(2); }

GridFunction random_function(const Grid& g, std::uint64_t seed) {
    SplitMix rng(seed);
    GridFunction u(g);
    for (auto& v : u.values) v = 2.0 * rng.uniform() - 1.0;
    return u;
}

}  // namespace

TEST(Lp, KnownOptimum) {
    // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0, 1, 3, 0, 1;
    Eigen::VectorXd b(2), c(4);
    b << 4, 6;
    c << -1, -2, 0, 0;
    const auto r = solve_standard_lp(A, b, c);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, -5.0, 1e-10);
    EXPECT_NEAR(r.y[0], 3.0, 1e-10);
    EXPECT_NEAR(r.y[1], 1.0, 1e-10);
    // Strong duality: b . pi equals the objective.
    EXPECT_NEAR(b.dot(r.pi), r.objective, 1e-10);
}

TEST(Lp, InfeasibleAndUnbounded) {
    Eigen::MatrixXd A(1, 2);
    A << 1, 1;
    Eigen::VectorXd b(1), c(2);
    b << -1;
    c << 1, 1;
    EXPECT_EQ(solve_standard_lp(A, b, c).status, LpStatus::infeasible);
    Eigen::MatrixXd A2(1, 2);
    A2 << 1, -1;
    b << 0;
    c << -1, 0;
    EXPECT_EQ(solve_standard_lp(A2, b, c).status, LpStatus::unbounded);
}

TEST(Minimax, AffineFunctionIsFitExactly) {
    const Grid g = origin_grid(2, 16.0, 0.5);
    const GridFunction u(g, [](const Point& x) { return 1.0 + 2.0 * x[0] - 3.0 * x[1]; });
    const auto f = best_fit(u, zero2(), 8.0, FitKind::affine);
    EXPECT_NEAR(f.achieved_osc, 0.0, 1e-9);
    EXPECT_NEAR(f.p[0], 2.0, 1e-9);
    EXPECT_NEAR(f.p[1], -3.0, 1e-9);
}

TEST(Minimax, ParaboloidAffineOscillationIsHalfRadiusSquared) {
    const Grid g = origin_grid(2, 16.0, 0.5);
    const GridFunction u(g, [](const Point& x) { return 0.5 * x.squaredNorm(); });
    const auto f = best_fit(u, zero2(), 8.0, FitKind::affine);
    EXPECT_NEAR(f.achieved_osc, 32.0, 1e-8);
    EXPECT_LE(f.gap(), 1e-8);
    const auto q = best_fit(u, zero2(), 8.0, FitKind::quadratic);
    EXPECT_NEAR(q.achieved_osc, 0.0, 1e-8);
    EXPECT_NEAR(q.Q(0, 0), 1.0, 1e-8);
    EXPECT_NEAR(q.Q(0, 1), 0.0, 1e-8);
}

/// The LP optimum matches a brute-force search over slopes and the dual bound
/// never exceeds the achieved oscillation.
TEST(Minimax, MatchesBruteForceAndDualBound) {
    const Grid g = origin_grid(2, 8.0, 0.5);
    const GridFunction w(g, [](const Point& x) {
        return std::sin(0.3 * x[0]) * std::cos(0.2 * x[1]) + 0.05 * x[0] * x[1];
    });
    const auto fw = best_fit(w, zero2(), 4.0, FitKind::affine);
    const auto idx = ball_points(g, zero2(), 4.0);
    double best = 1e9;
    for (double a = -0.6; a <= 0.6; a += 0.004)
        for (double b = -0.6; b <= 0.6; b += 0.004) {
            double lo = 1e9, hi = -1e9;
            for (auto i : idx) {
                const auto x = g.point(i);
                const double v = w[i] - a * x[0] - b * x[1];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            best = std::min(best, hi - lo);
        }
    EXPECT_LE(fw.achieved_osc, best + 1e-12);
    EXPECT_GT(fw.achieved_osc, best - 0.02);
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto u = random_function(g, s);
        for (FitKind k : {FitKind::affine, FitKind::quadratic}) {
            const auto f = best_fit(u, zero2(), 3.0, k);
            ASSERT_LE(f.dual_bound, f.achieved_osc + 1e-9);
            ASSERT_LE(f.gap(), 1e-8 * std::max(1.0, f.achieved_osc));
        }
    }
}

TEST(Minimax, DegenerateAndOutOfBox) {
    const Grid g = origin_grid(2, 4.0, 1.0);
    const GridFunction u(g, 1.0);
    EXPECT_THROW(best_fit(u, zero2(), 0.5, FitKind::quadratic), DegenerateError);
    EXPECT_THROW(ball_points(g, zero2(), 5.0), DomainError);
    EXPECT_EQ(fit_coefficients(FitKind::quadratic, 3), 10);
    EXPECT_EQ(fit_coefficients(FitKind::affine, 3), 4);
}

TEST(Seminorms, ClosedFormOracles) {
    const Grid g = origin_grid(2, 16.0, 0.5);
    const GridFunction lin(g, [](const Point& x) { return x[0]; });
    EXPECT_NEAR(coarsened_seminorm(lin, zero2(), 1.0, SeminormOrder::zeroth), 2.0, 1e-9);
    const GridFunction par(g, [](const Point& x) { return 0.5 * x.squaredNorm(); });
    EXPECT_NEAR(coarsened_seminorm(par, zero2(), 1.0, SeminormOrder::first), 0.5, 1e-8);
}

TEST(Seminorms, MonotoneInFloor) {
    const Grid g = origin_grid(2, 16.0, 0.5);
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const auto u = random_function(g, s);
        double prev = 1e300;
        for (double hf : {0.5, 1.0, 2.0, 4.0}) {
            const double v = coarsened_seminorm(u, zero2(), hf, SeminormOrder::first);
            ASSERT_LE(v, prev + 1e-12);
            prev = v;
        }
    }
}

TEST(Interpolation, RatioBelowOneOnBumps) {
    const Grid g = origin_grid(2, 8.0, 0.5);
    for (int t = 0; t < 8; ++t) {
        const GridFunction b(g, [&](const Point& x) {
            return std::exp(-((x[0] - 1) * (x[0] - 1) + x[1] * x[1]) / (4.0 + t));
        });
        const auto ic = interpolation_check(b, zero2(), 0.5, 8.0);
        ASSERT_FALSE(ic.degenerate);
        EXPECT_LE(ic.ratio, 1.0);
        EXPECT_GT(ic.lhs, 0.0);
    }
}

TEST(Interpolation, AffineInputIsDegenerate) {
    const Grid g = origin_grid(2, 8.0, 0.5);
    const GridFunction a(g, [](const Point& x) { return 3.0 + x[0] - 0.5 * x[1]; });
    const auto ic = interpolation_check(a, zero2(), 0.5, 8.0);
    EXPECT_TRUE(ic.degenerate);
    EXPECT_TRUE(std::isnan(ic.ratio));
}

TEST(Cascade, IdentitiesHoldOnRandomFunctions) {
    const Grid g = origin_grid(2, 16.0, 0.25);
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto tr = quadratic_cascade(random_function(g, s), 0.25, 1.0, 16.0);
        ASSERT_GE(tr.steps.size(), 3u);
        EXPECT_GE(tr.min_margin(), -1e-8);
        EXPECT_DOUBLE_EQ(tr.steps[0].s, 16.0);
        EXPECT_DOUBLE_EQ(tr.steps[1].s, 4.0);
        EXPECT_DOUBLE_EQ(tr.steps[2].s, 1.0);
        EXPECT_TRUE(std::isnan(tr.steps.back().margin_q_diff));
    }
    EXPECT_THROW(quadratic_cascade(random_function(origin_grid(2, 16.0, 0.5), 1), 0.25, 1.0, 16.0),
                 DomainError);
}

TEST(Cascade, QuadraticIsReproducedExactly) {
    const Grid g = origin_grid(2, 16.0, 0.5);
    const GridFunction u(g, [](const Point& x) { return x[0] * x[0] - 0.5 * x[0] * x[1]; });
    const auto tr = quadratic_cascade(u, 0.25, 2.0, 16.0);
    for (const auto& st : tr.steps) {
        EXPECT_NEAR(st.G, 0.0, 1e-9);
        EXPECT_NEAR(st.Q(0, 0), 2.0, 1e-8);
    }
}

TEST(Experiments, RegularityValidation) {
    RegularityConfig c;
    c.field = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    EXPECT_NO_THROW(c.validate());
    c.boundary = "cubic";
    EXPECT_ANY_THROW(c.validate());
    c.boundary = "saddle";
    c.h_floor = 0.25;
    EXPECT_ANY_THROW(c.validate());
}

TEST(Experiments, HomogenizationErrorOfConstantFieldIsSolverNoise) {
    HomogenizationErrorConfig c;
    c.field = FieldSpec::constant(2, 2.0);
    c.radii = {8.0, 16.0, 32.0};
    c.samples = 2;
    c.ahom = SymMatrix(2.0 * SymMatrix::Identity(2, 2));
    c.boundary = "paraboloid";
    const auto rep = homogenization_error_experiment(c);
    for (const auto& cell : rep.cells)
        for (const auto& [q, s] : cell.quantities)
            if (q == "error") {
                EXPECT_LT(s.max, 1e-6);
            }
}
