#include "homlab/grid.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace homlab;

namespace {

SymMatrix mat2(double a, double b, double c) {
    SymMatrix A(2, 2);
    A << a, b, b, c;
    return A;
}

double quad(const SymMatrix& B, const Point& x) { return 0.5 * x.dot(B * x); }

SymMatrix random_spd(int d, SplitMix& rng, double lo, double hi) {
    SymMatrix A = SymMatrix::Zero(d, d);
    const double off = 0.4 * (hi - lo) / (2.0 * std::max(1, d - 1));
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) A(i, j) = A(j, i) = off * (2.0 * rng.uniform() - 1.0);
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
            if (j != i) s += std::abs(A(i, j));
        A(i, i) = lo + s + (hi - lo - 2.0 * s) * rng.uniform() * 0.5;
    }
    return A;
}

}  // namespace

TEST(GridTest, IndexingRoundTrip) {
    const Grid g = origin_grid(3, 2.0, 0.5);
    EXPECT_EQ(g.half(), 4);
    EXPECT_EQ(g.n_axis(), 9);
    EXPECT_EQ(g.size(), 729);
    std::int64_t k[kMaxDim];
    for (std::int64_t i = 0; i < g.size(); ++i) {
        g.coords(i, k);
        ASSERT_EQ(g.index(k), i);
        ASSERT_EQ(g.nearest(g.point(i)), i);
    }
    EXPECT_NEAR(g.point(g.center_index()).norm(), 0.0, 0.0);
    EXPECT_TRUE(g.on_boundary(0));
    EXPECT_FALSE(g.on_boundary(g.center_index()));
    Point far(3);
    far << 2.6, 0.0, 0.0;
    EXPECT_THROW(g.nearest(far), DomainError);
}

TEST(GridTest, BinaryRoundTrip) {
    const Grid g = origin_grid(2, 3.0, 0.25);
    GridFunction u(g, [](const Point& x) { return std::sin(x[0]) * std::exp(x[1]); });
    std::stringstream ss;
    write_binary(u, ss);
    const GridFunction v = read_binary(ss);
    EXPECT_EQ(v.grid, u.grid);
    EXPECT_EQ(v.values, u.values);
}

TEST(Stencil, CrossStencilIsExactOnQuadratics) {
    const SymMatrix A = mat2(2.0, 0.4, 1.0);
    const SymMatrix B = mat2(1.5, -0.7, 0.3);
    const Grid g = origin_grid(2, 4.0, 0.5);
    const double eps = 0.3;
    const auto op = assemble([&](const Point&) { return A; }, 2, true, eps, g);
    const GridFunction u(g, [&](const Point& x) { return quad(B, x); });
    const GridFunction Lu = apply(op, u);
    const double trAB = (A * B).trace();
    for (std::int64_t i = 0; i < g.size(); ++i) {
        if (op.is_dirichlet(i)) continue;
        ASSERT_NEAR(Lu[i], eps * eps * u[i] - trAB, 1e-11);
    }
}

TEST(Stencil, WideStencilIsExactOnQuadratics) {
    SplitMix rng(4);
    const auto offs = wide_offsets(3);
    for (int t = 0; t < 20; ++t) {
        SymMatrix A = random_spd(3, rng, 1.0, 4.0);
        A(0, 1) = A(1, 0) = 0.9 * std::min(A(0, 0), A(1, 1));
        if (A.ldlt().vectorD().minCoeff() <= 0.0) continue;
        std::vector<double> w(offs.size());
        if (!wide_stencil_row(A, 0.0, 0.5, offs, w.data())) continue;
        const SymMatrix B = random_spd(3, rng, -1.0, 1.0);
        double lu = 0.0;
        for (std::size_t o = 0; o < offs.size(); ++o) {
            Point x(3);
            for (int k = 0; k < 3; ++k) x[k] = 0.5 * offs[o].k[std::size_t(k)];
            lu += w[o] * quad(B, x);
        }
        EXPECT_NEAR(lu, -(A * B).trace(), 1e-11);
        for (std::size_t o = 1; o < offs.size(); ++o) EXPECT_LE(w[o], 1e-15);
    }
}

TEST(Stencil, AssembledCheckerboardIsMonotone) {
    for (int d : {2, 3}) {
        const auto spec = FieldSpec::checkerboard(d, {1.0, 4.0}, {0.5, 0.5});
        const MatrixField f(spec, sample_environment(spec, 3));
        const auto op = assemble(f, 0.25, origin_grid(d, 4.0, 0.5));
        const auto rep = check_monotone(op);
        EXPECT_TRUE(rep.is_monotone);
        EXPECT_TRUE(op.monotone);
        EXPECT_GT(rep.margin, 0.0);
    }
}

TEST(Stencil, FullSymmetricFieldsStayMonotoneWithFallback) {
    FieldSpec spec;
    spec.kind = FieldKind::full_symmetric;
    spec.dimension = 3;
    spec.lambda = 1.0;
    spec.Lambda = 4.0;
    spec.dominance = 1.0;
    const MatrixField f(spec, sample_environment(spec, 8));
    const auto op = assemble(f, 0.25, origin_grid(3, 3.0, 0.5));
    EXPECT_TRUE(check_monotone(op).is_monotone);
}

TEST(Solver, RecoversQuadraticDirichletSolution) {
    const SymMatrix A = mat2(3.0, 0.5, 1.5);
    const SymMatrix B = mat2(1.0, 0.25, -2.0);
    const double eps = 0.2;
    const Grid g = origin_grid(2, 32.0, 0.5);
    auto op = assemble([&](const Point&) { return A; }, 2, true, eps, g);
    const auto u_exact = [&](const Point& x) { return quad(B, x) + x[0] - 2.0; };
    op.set_boundary(u_exact);
    GridFunction rhs(g, [&](const Point& x) { return eps * eps * u_exact(x) - (A * B).trace(); });
    SolveStats st;
    const auto u = solve(op, rhs, 1e-12, &st);
    EXPECT_GE(st.levels, 2);
    double err = 0.0;
    for (std::int64_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(u[i] - u_exact(g.point(i))));
    EXPECT_LT(err, 1e-8);
}

TEST(Solver, ResidualContractHolds) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 21));
    const double eps = 0.125, tol = 1e-9;
    auto op = assemble(f, eps, origin_grid(2, 16.0, 0.5));
    op.set_boundary(0.3);
    GridFunction rhs(op.grid, [](const Point& x) { return std::cos(x[0]) + 0.5; });
    const auto u = solve(op, rhs, tol);
    const auto r = rhs - apply(op, u);
    double res = 0.0, srhs = 0.0;
    for (std::int64_t i = 0; i < op.grid.size(); ++i)
        if (!op.is_dirichlet(i)) {
            res = std::max(res, std::abs(r[i]));
            srhs = std::max(srhs, std::abs(rhs[i]));
        }
    EXPECT_LE(res, tol * (srhs + eps * eps * u.sup_norm()) * (1.0 + 1e-9));
}

/// Ordered data gives ordered solutions on random monotone instances.
TEST(Solver, ComparisonPrincipleProperty) {
    SplitMix rng(99);
    for (int t = 0; t < 10; ++t) {
        const int d = 2 + t % 2;
        const auto spec = FieldSpec::checkerboard(d, {1.0, 2.0, 5.0}, {0.3, 0.4, 0.3});
        const MatrixField f(spec, sample_environment(spec, 100 + std::uint64_t(t)));
        const double eps = 0.1 + 0.4 * rng.uniform(), tol = 1e-10;
        auto op = assemble(f, eps, origin_grid(d, d == 2 ? 8.0 : 4.0, 0.5));
        op.set_boundary([&](const Point& x) { return std::sin(x[0]); });
        GridFunction r1(op.grid), r2(op.grid);
        for (std::int64_t i = 0; i < op.grid.size(); ++i) {
            r1[i] = 2.0 * rng.uniform() - 1.0;
            r2[i] = r1[i] + rng.uniform();
        }
        const auto u1 = solve(op, r1, tol);
        const auto u2 = solve(op, r2, tol);
        const double slack = 2.0 * tol * std::max({1.0, u1.sup_norm(), u2.sup_norm()}) *
                             (1.0 + 1.0 / (eps * eps));
        for (std::int64_t i = 0; i < op.grid.size(); ++i) ASSERT_LE(u1[i], u2[i] + slack);
    }
}

TEST(Solver, AdjointSolveIsTranspose) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 5));
    auto op = assemble(f, 0.25, origin_grid(2, 8.0, 0.5));
    op.set_boundary(0.0);
    GridFunction a(op.grid, [](const Point& x) { return std::exp(-x.squaredNorm() / 8.0); });
    GridFunction b(op.grid, [](const Point& x) { return 1.0 + 0.1 * x[0]; });
    const auto u = solve(op, a, 1e-12);
    const auto v = adjoint_solve(op, b, 1e-12);
    EXPECT_NEAR(interior_dot(b, u), interior_dot(v, a), 1e-8 * std::abs(interior_dot(b, u)));
}

TEST(Solver, DeterministicAcrossCalls) {
    const auto spec = FieldSpec::checkerboard(3, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 6));
    const auto op = assemble(f, 0.25, origin_grid(3, 4.0, 0.5));
    GridFunction rhs(op.grid, 1.0);
    EXPECT_EQ(solve(op, rhs, 1e-10).values, solve(op, rhs, 1e-10).values);
}
