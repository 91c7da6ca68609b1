#include "htstep/errors.hpp"
#include "htstep/fokker_planck.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace htstep;

TEST(Drift, ComponentsMatchPointwiseFormula) {
    const int d = 4;
    const Index n = 6;
    const DriftSpec drift = DriftSpec::paper_4d();
    for (int i = 0; i < d; ++i) {
        const DenseTensor mu = drift_component(d, n, drift, i);
        const PeriodicGrid g(n);
        for (Index lin = 0; lin < mu.size(); ++lin) {
            const auto idx = oracle::unravel(lin, mu.dims());
            std::vector<double> x;
            for (Index k : idx) x.push_back(g.node(k));
            EXPECT_NEAR(mu.data()(lin),
                        oracle::drift_component(drift.gamma.name(), drift.xi.name(), drift.phi.name(), x, i), 1e-13);
        }
    }
}

TEST(Drift, NamedFunctions) {
    for (const char* name : {"zero", "sin", "cos", "exp_sin_plus_1", "exp_cos"})
        EXPECT_EQ(DriftFunction::by_name(name).name(), name);
    EXPECT_THROW(DriftFunction::by_name("tan"), InputError);
    EXPECT_TRUE(DriftFunction::by_name("zero").is_zero());
    const PeriodicGrid g(8);
    const Eigen::VectorXd s = DriftFunction::by_name("exp_sin_plus_1").sample(g);
    EXPECT_DOUBLE_EQ(s(2), std::exp(std::sin(g.node(2))) + 1.0);
}

TEST(InitialCondition, TwoDimensionalHasUnitMassAndMatchesFormula) {
    const Index n = 16;
    const PeriodicGrid g(n);
    const HTensor h = ic_2d(n);
    EXPECT_NEAR(mass(h, g), 1.0, 1e-12);
    const DenseTensor raw = ic_2d_samples(n);
    const double m = mass(raw, g);
    const DenseTensor dense = ht_to_dense(h);
    EXPECT_LT((dense.data() - raw.data() / m).norm(), 1e-10 * dense.norm());
    const double x1 = g.node(3), x2 = g.node(5);
    const double a = std::sin(x1 - x2), b = std::sin(x1 + x2);
    EXPECT_DOUBLE_EQ(raw({3, 5}), std::exp(a * a) + b * b);
}

TEST(InitialCondition, FourDimensionalHasUnitMassAndLowRank) {
    const Index n = 8;
    const PeriodicGrid g(n);
    for (int m : {1, 3}) {
        const HTensor h = ic_4d(n, m);
        EXPECT_NEAR(mass(h, g), 1.0, 1e-12);
        EXPECT_LE(h.max_rank(), 2 * m);
        EXPECT_GT(ht_to_dense(h).data().minCoeff(), 0.0);
    }
    EXPECT_THROW(ic_4d(n, 0), InputError);
    EXPECT_THROW(ic_4d(n, 1, make_tree("balanced", 3)), InputError);
}

TEST(Marginal, MatchesDenseSumAndKeepsMass) {
    const Index n = 6;
    const PeriodicGrid g(n);
    const HTensor h = ic_4d(n, 2);
    const DenseTensor dense = ht_to_dense(h);
    const Eigen::MatrixXd m = marginal_12(h, g);
    ASSERT_EQ(m.rows(), n);
    ASSERT_EQ(m.cols(), n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            double s = 0.0;
            for (Index k = 0; k < n; ++k)
                for (Index l = 0; l < n; ++l) s += dense({i, j, k, l});
            EXPECT_NEAR(m(i, j), s * g.weight() * g.weight(), 1e-13);
        }
    EXPECT_NEAR(m.sum() * g.weight() * g.weight(), 1.0, 1e-12);
    EXPECT_THROW(marginal_12(ic_2d(n), g), InputError);
}

TEST(Presets, KnownNamesAndOverrides) {
    const FPProblem p2 = make_preset("fp2d-paper", 12);
    EXPECT_EQ(p2.d, 2);
    EXPECT_EQ(p2.n, 12);
    EXPECT_EQ(p2.drift.sigma, 2.0);
    EXPECT_EQ(p2.op.term_count(), 8u);
    EXPECT_EQ(p2.f0.order(), 2);
    const FPProblem p4 = make_preset("fp4d-paper", 6);
    EXPECT_EQ(p4.d, 4);
    EXPECT_EQ(p4.ic_terms, 10);
    EXPECT_EQ(p4.op.term_count(), 16u);
    EXPECT_EQ(make_preset("fp4d-paper", 6, "linear").f0.order(), 4);
    EXPECT_THROW(make_preset("fp3d"), InputError);
    EXPECT_THROW(make_problem(3, 6, DriftSpec::zero(), 1, "balanced"), InputError);
}

TEST(FokkerPlanck, GeneratorKillsNoMassOnInitialCondition) {
    const FPProblem p = make_preset("fp2d-paper", 16);
    const DenseTensor nf = apply_dense(p.op, ht_to_dense(p.f0));
    EXPECT_LT(std::abs(mass(nf, p.grid())), 1e-10 * nf.norm());
}
