#include "homlab/env.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <map>
#include <set>

using namespace homlab;

TEST(Hash, SiteSeedsAreDeterministicAndDistinct) {
    std::set<std::uint64_t> seen;
    for (const auto& z : IntBox::cube(2, 10).sites()) {
        EXPECT_EQ(hash_site(7, z), hash_site(7, z));
        seen.insert(hash_site(7, z));
    }
    EXPECT_EQ(seen.size(), 441u);
    EXPECT_NE(hash_site(7, Site{0, 0}), hash_site(8, Site{0, 0}));
}

TEST(Hash, SplitMixUniformMeanAndRange) {
    SplitMix rng(3);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(IntBoxTest, CountAndOrder) {
    const auto b = IntBox::cube(3, 2);
    EXPECT_EQ(b.count(), 125);
    const auto s = b.sites();
    ASSERT_EQ(std::int64_t(s.size()), b.count());
    EXPECT_EQ(s.front(), (Site{-2, -2, -2}));
    EXPECT_EQ(s[1], (Site{-2, -2, -1}));
    EXPECT_TRUE(b.contains(Site{2, 0, -2}));
    EXPECT_FALSE(b.contains(Site{3, 0, 0}));
}

TEST(DiscreteLawTest, DrawFrequenciesMatchProbabilities) {
    DiscreteLaw l{{1.0, 4.0, 9.0}, {0.2, 0.5, 0.3}};
    l.validate("law");
    std::map<double, int> counts;
    SplitMix rng(11);
    const int n = 200000;
    for (int i = 0; i < n; ++i) ++counts[l.draw(rng.uniform())];
    EXPECT_NEAR(counts[1.0] / double(n), 0.2, 0.005);
    EXPECT_NEAR(counts[4.0] / double(n), 0.5, 0.005);
    EXPECT_NEAR(counts[9.0] / double(n), 0.3, 0.005);
    EXPECT_EQ(l.min(), 1.0);
    EXPECT_EQ(l.max(), 9.0);
}

TEST(DiscreteLawTest, RejectsBadLaws) {
    EXPECT_THROW((DiscreteLaw{{1.0, 2.0}, {0.5, 0.6}}.validate("l")), InvalidSpec);
    EXPECT_THROW((DiscreteLaw{{1.0, 2.0}, {0.5}}.validate("l")), InvalidSpec);
    EXPECT_THROW((DiscreteLaw{{}, {}}.validate("l")), InvalidSpec);
}

TEST(FieldSpecTest, ValidationRejectsBadParameters) {
    FieldSpec s = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    EXPECT_NO_THROW(s.validate());
    s.dimension = 7;
    EXPECT_THROW(s.validate(), InvalidSpec);
    s = FieldSpec::checkerboard(2, {-1.0, 4.0}, {0.5, 0.5});
    EXPECT_THROW(s.validate(), InvalidSpec);
    s = FieldSpec::constant(2, 1.0);
    s.ell = 0.5;
    EXPECT_THROW(s.validate(), InvalidSpec);
}

TEST(FieldSpecTest, DefaultRangeIsTwiceRootD) {
    EXPECT_DOUBLE_EQ(FieldSpec::constant(3, 1.0).range(), 2.0 * std::sqrt(3.0));
}

TEST(FieldSpecTest, JsonRoundTrip) {
    nlohmann::json j = {{"kind", "full_symmetric"}, {"dimension", 3}, {"lambda", 1.0},
                        {"Lambda", 4.0}, {"dominance", 0.7}};
    const auto s = j.get<FieldSpec>();
    EXPECT_EQ(s.kind, FieldKind::full_symmetric);
    const nlohmann::json back = s;
    EXPECT_EQ(nlohmann::json(back.get<FieldSpec>()), back);
    EXPECT_DOUBLE_EQ(s.dominance, 0.7);
    nlohmann::json c = {{"kind", "scalar_checkerboard"}, {"dimension", 2}, {"values", {1, 4}}};
    const auto cs = c.get<FieldSpec>();
    EXPECT_DOUBLE_EQ(cs.lambda, 1.0);
    EXPECT_DOUBLE_EQ(cs.Lambda, 4.0);
    EXPECT_DOUBLE_EQ(cs.scalar_law.probabilities[1], 0.5);
    c["bogus"] = 1;
    EXPECT_THROW(c.get<FieldSpec>(), InvalidSpec);
}

class CellMatrixBounds : public ::testing::TestWithParam<FieldSpec> {};

TEST_P(CellMatrixBounds, SymmetricWithEigenvaluesInEllipticityRange) {
    const FieldSpec spec = GetParam();
    spec.validate();
    for (std::uint64_t s = 1; s <= 500; ++s) {
        const SymMatrix A = cell_matrix(spec, mix64(s));
        ASSERT_EQ(A.rows(), spec.dimension);
        ASSERT_LE((A - A.transpose()).norm(), 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(A)};
        ASSERT_GE(es.eigenvalues().minCoeff(), spec.lambda - 1e-12);
        ASSERT_LE(es.eigenvalues().maxCoeff(), spec.Lambda + 1e-12);
    }
}

FieldSpec full_spec(int d) {
    FieldSpec s;
    s.kind = FieldKind::full_symmetric;
    s.dimension = d;
    s.lambda = 1.0;
    s.Lambda = 4.0;
    return s;
}

FieldSpec diagonal_spec() {
    FieldSpec s;
    s.kind = FieldKind::diagonal_iid;
    s.dimension = 3;
    s.axis_laws = {DiscreteLaw{{1.0, 2.0}, {0.5, 0.5}}, DiscreteLaw{{3.0}, {1.0}},
                   DiscreteLaw{{1.5, 4.0}, {0.25, 0.75}}};
    s.lambda = 1.0;
    s.Lambda = 4.0;
    return s;
}

INSTANTIATE_TEST_SUITE_P(Kinds, CellMatrixBounds,
                         ::testing::Values(FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5}),
                                           FieldSpec::checkerboard(3, {1.0, 2.0, 4.0},
                                                                   {0.3, 0.3, 0.4}),
                                           diagonal_spec(), full_spec(2), full_spec(3),
                                           full_spec(5)));

TEST(Lattice, TranslationShiftsSeeds) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const auto L = sample_environment(spec, 42);
    const Site z{3, -2};
    const auto T = translate(L, z);
    for (const auto& x : IntBox::cube(2, 4).sites()) EXPECT_EQ(T.seed_at(x), L.seed_at(x + z));
}

TEST(Lattice, TranslatedFieldIsStationaryInLaw) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    double at_origin = 0.0, at_shift = 0.0;
    const int n = 4000;
    for (int s = 0; s < n; ++s) {
        const auto L = sample_environment(spec, std::uint64_t(s) + 1);
        const MatrixField f(spec, L);
        const MatrixField g(spec, translate(L, Site{5, 7}));
        at_origin += f.cell_value(Site{0, 0})(0, 0);
        at_shift += g.cell_value(Site{0, 0})(0, 0);
        ASSERT_EQ(g.cell_value(Site{0, 0}), f.cell_value(Site{5, 7}));
    }
    EXPECT_NEAR(at_origin / n, 2.5, 0.1);
    EXPECT_NEAR(at_shift / n, 2.5, 0.1);
}

TEST(Lattice, ResampleTouchesOnlyOneSite) {
    const auto spec = FieldSpec::checkerboard(3, {1.0, 4.0}, {0.5, 0.5});
    const auto L = sample_environment(spec, 9);
    const Site z{1, 0, -1};
    const auto R = resample_site(L, z, 12345);
    EXPECT_EQ(R.seed_at(z), 12345u);
    for (const auto& x : IntBox::cube(3, 3).sites())
        if (!(x == z)) ASSERT_EQ(R.seed_at(x), L.seed_at(x));
}

TEST(Lattice, ResampleThenTranslateCommutes) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const auto L = sample_environment(spec, 5);
    const Site z{2, 2}, t{1, -1};
    const auto a = translate(resample_site(L, z, 77), t);
    const auto b = resample_site(translate(L, t), z - t, 77);
    for (const auto& x : IntBox::cube(2, 4).sites()) EXPECT_EQ(a.seed_at(x), b.seed_at(x));
}

TEST(MatrixFieldTest, ConstantFieldIsConstant) {
    const auto spec = FieldSpec::constant(3, 2.0);
    const MatrixField f(spec, sample_environment(spec, 1));
    Point x(3);
    x << 0.3, -7.2, 11.9;
    EXPECT_EQ(f.eval(x), SymMatrix(2.0 * SymMatrix::Identity(3, 3)));
}

TEST(MatrixFieldTest, CheckerboardIsPiecewiseConstantOnCells) {
    const auto spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
    const MatrixField f(spec, sample_environment(spec, 3));
    Point x(2), y(2);
    x << 2.1, -0.9;
    y << 2.8, -0.2;
    EXPECT_EQ(f.eval(x), f.eval(y));
    EXPECT_EQ(f.eval(x), f.cell_value(Site{2, -1}));
}

TEST(MatrixFieldTest, RadialCounterexampleIsDeterministicAndBounded) {
    const auto spec = FieldSpec::radial(3, RadialVariant::A1, 4.0);
    const MatrixField f(spec, sample_environment(spec, 1));
    const MatrixField g(spec, sample_environment(spec, 2));
    SplitMix rng(1);
    for (int i = 0; i < 200; ++i) {
        Point x(3);
        for (int k = 0; k < 3; ++k) x[k] = 20.0 * rng.uniform() - 10.0;
        const SymMatrix A = f.eval(x);
        ASSERT_EQ(A, g.eval(x));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(A)};
        ASSERT_GE(es.eigenvalues().minCoeff(), 1.0 - 1e-12);
        ASSERT_LE(es.eigenvalues().maxCoeff(), 4.0 + 1e-12);
    }
}
