#include "htstep/errors.hpp"
#include "htstep/fokker_planck.hpp"
#include "htstep/kron_operator.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace htstep;

namespace {

KronSumOperator random_operator(std::mt19937_64& rng, const Dims& dims, int terms) {
    KronSumOperator op(dims);
    std::uniform_int_distribution<int> kind(0, 2);
    for (int t = 0; t < terms; ++t) {
        std::map<int, ModeFactor> f;
        for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
            const int c = kind(rng);
            if (c == 1) f.emplace(k, ModeFactor::diagonal(oracle::random_vector(rng, dims[k])));
            if (c == 2) f.emplace(k, ModeFactor::dense(oracle::random_matrix(rng, dims[k], dims[k])));
        }
        op.add_term(0.5 + t, f);
    }
    return op;
}

Eigen::MatrixXd assemble_by_oracle(const KronSumOperator& op) {
    const Dims& dims = op.dims();
    Index total = 1;
    for (Index n : dims) total *= n;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
    for (const auto& term : op.terms()) {
        std::vector<Eigen::MatrixXd> factors;
        for (int k = 0; k < op.order(); ++k) factors.push_back(op.factor(k, term.factor_ids[k]).to_matrix());
        out += term.coeff * oracle::kron_all(factors);
    }
    return out;
}

}  // namespace

TEST(KronOperator, AssembleMatchesExplicitKronecker) {
    std::mt19937_64 rng(31);
    const KronSumOperator op = random_operator(rng, {3, 2, 4}, 4);
    EXPECT_LT((op.assemble() - assemble_by_oracle(op)).norm(), 1e-12 * op.assemble().norm());
}

TEST(KronOperator, DenseApplyMatchesAssembledMatrix) {
    std::mt19937_64 rng(32);
    const Dims dims{3, 4, 2};
    const KronSumOperator op = random_operator(rng, dims, 5);
    const DenseTensor x(dims, oracle::random_vector(rng, 24));
    const Eigen::VectorXd expect = assemble_by_oracle(op) * x.data();
    EXPECT_LT((apply_dense(op, x).data() - expect).norm(), 1e-12 * expect.norm());
}

TEST(KronOperator, HTApplyMatchesDenseAndBoundsRanks) {
    std::mt19937_64 rng(33);
    for (const char* tree_name : {"balanced", "linear"}) {
        const Dims dims{3, 4, 2, 3};
        const auto tree = make_tree(tree_name, 4);
        const KronSumOperator op = random_operator(rng, dims, 4);
        const DenseTensor x(dims, oracle::random_vector(rng, 72));
        const HTensor h = ht_from_dense(x, tree, TruncationControl::fixed_rank(2)).tensor;
        const DenseTensor hx = ht_to_dense(h);
        const HTensor y = apply_ht(op, h);
        const DenseTensor expect = apply_dense(op, hx);
        EXPECT_LT((ht_to_dense(y).data() - expect.data()).norm(), 1e-12 * expect.norm()) << tree_name;
        for (int t = 1; t < tree->node_count(); ++t)
            EXPECT_LE(y.rank(t), static_cast<Index>(op.term_count()) * h.rank(t)) << tree_name << " node " << t;
    }
}

TEST(KronOperator, FactorsAreInterned) {
    KronSumOperator op({4, 4});
    const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(4, 1, 4);
    op.add_term(1.0, {{0, ModeFactor::diagonal(d)}});
    op.add_term(2.0, {{0, ModeFactor::diagonal(d)}, {1, ModeFactor::diagonal(d)}});
    EXPECT_EQ(op.distinct_factor_count(0), 2u);  // identity + d
    EXPECT_EQ(op.terms()[0].factor_ids[0], op.terms()[1].factor_ids[0]);
    EXPECT_EQ(op.terms()[0].factor_ids[1], 0);
    EXPECT_THROW(op.add_term(1.0, {{2, ModeFactor::diagonal(d)}}), InputError);
    EXPECT_THROW(op.add_term(1.0, {{0, ModeFactor::diagonal(Eigen::VectorXd::Ones(3))}}), InputError);
}

TEST(FokkerPlanckOperator, FourDimensionalTermCount) {
    const KronSumOperator op = build_fp_operator(4, 6, DriftSpec::paper_4d());
    EXPECT_EQ(op.term_count(), 16u);
    EXPECT_EQ(build_fp_operator(3, 6, DriftSpec::zero()).term_count(), 3u);
}

struct FPCase {
    int d;
    Index n;
    std::string gamma, xi, phi;
};

class FPOracleTest : public ::testing::TestWithParam<FPCase> {};

TEST_P(FPOracleTest, MatchesPointwiseSpectralOracle) {
    const auto& p = GetParam();
    std::mt19937_64 rng(34);
    const DriftSpec drift{DriftFunction::by_name(p.gamma), DriftFunction::by_name(p.xi), DriftFunction::by_name(p.phi), 2.0};
    const KronSumOperator op = build_fp_operator(p.d, p.n, drift);
    Index total = 1;
    for (int k = 0; k < p.d; ++k) total *= p.n;
    const DenseTensor f(Dims(static_cast<std::size_t>(p.d), p.n), oracle::random_vector(rng, total));
    const Eigen::VectorXd expect = oracle::fp_apply(p.d, p.n, p.gamma, p.xi, p.phi, 2.0, f.data());
    EXPECT_LT((apply_dense(op, f).data() - expect).norm(), 1e-10 * expect.norm());
}

TEST_P(FPOracleTest, ConservesMass) {
    const auto& p = GetParam();
    const DriftSpec drift{DriftFunction::by_name(p.gamma), DriftFunction::by_name(p.xi), DriftFunction::by_name(p.phi), 2.0};
    const Eigen::MatrixXd n_mat = build_fp_operator(p.d, p.n, drift).assemble();
    EXPECT_LT(n_mat.colwise().sum().cwiseAbs().maxCoeff(), 1e-10 * n_mat.cwiseAbs().maxCoeff());
}

INSTANTIATE_TEST_SUITE_P(Drifts, FPOracleTest,
                         ::testing::Values(FPCase{2, 8, "sin", "cos", "exp_sin_plus_1"},
                                           FPCase{3, 6, "sin", "exp_sin_plus_1", "cos"},
                                           FPCase{4, 4, "sin", "exp_sin_plus_1", "cos"},
                                           FPCase{2, 6, "zero", "cos", "zero"}));
