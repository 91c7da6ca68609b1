#include "htstep/errors.hpp"
#include "htstep/htensor.hpp"
#include "htstep/property_suites.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace htstep;

namespace {

DenseTensor random_tensor(std::mt19937_64& rng, const Dims& dims) {
    Index n = 1;
    for (Index d : dims) n *= d;
    return DenseTensor(dims, oracle::random_vector(rng, n));
}

// Dense tensor with decaying spectra: sum of a few rank-one terms with shrinking weights.
DenseTensor low_rank_tensor(std::mt19937_64& rng, const Dims& dims, int terms) {
    Index n = 1;
    for (Index d : dims) n *= d;
    Eigen::VectorXd data = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<Eigen::VectorXd> v;
        for (Index d : dims) v.push_back(oracle::random_vector(rng, d));
        const double w = std::pow(0.3, t);
        for (Index lin = 0; lin < n; ++lin) {
            const auto idx = oracle::unravel(lin, dims);
            double p = w;
            for (std::size_t k = 0; k < dims.size(); ++k) p *= v[k][idx[k]];
            data[lin] += p;
        }
    }
    return DenseTensor(dims, data);
}

double distance(const DenseTensor& a, const DenseTensor& b) { return (a.data() - b.data()).norm(); }

struct TreeCase {
    std::string tree;
    Dims dims;
};

class HTreeTest : public ::testing::TestWithParam<TreeCase> {};

}  // namespace

TEST_P(HTreeTest, ExactRoundTripThroughDense) {
    std::mt19937_64 rng(11);
    const auto& p = GetParam();
    const DenseTensor t = random_tensor(rng, p.dims);
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const Truncated h = ht_from_dense(t, tree, TruncationControl::tolerance(0.0));
    EXPECT_LT(distance(ht_to_dense(h.tensor), t), 1e-12 * t.norm());
    EXPECT_EQ(h.error_estimate, 0.0);
    h.tensor.validate();
}

TEST_P(HTreeTest, NormInnerAndCombineMatchDense) {
    std::mt19937_64 rng(12);
    const auto& p = GetParam();
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const DenseTensor a = low_rank_tensor(rng, p.dims, 3), b = low_rank_tensor(rng, p.dims, 2);
    const HTensor ha = ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor;
    const HTensor hb = ht_from_dense(b, tree, TruncationControl::tolerance(0.0)).tensor;
    EXPECT_NEAR(ht_norm(ha), a.norm(), 1e-12 * a.norm());
    EXPECT_NEAR(ht_inner(ha, hb), inner(a, b), 1e-12 * a.norm() * b.norm());
    const DenseTensor c = ht_to_dense(ht_linear_combine(0.7, ha, -2.0, hb));
    EXPECT_LT(distance(c, dense_linear_combine(0.7, a, -2.0, b)), 1e-12 * (a.norm() + b.norm()));
}

TEST_P(HTreeTest, OrthogonalizeGivesOrthonormalFrames) {
    std::mt19937_64 rng(13);
    const auto& p = GetParam();
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const DenseTensor a = low_rank_tensor(rng, p.dims, 3);
    const HTensor h = ht_orthogonalize(ht_linear_combine(1.0, ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor,
                                                         1.0, ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor));
    for (int t = 1; t < tree->node_count(); ++t) {
        const Eigen::MatrixXd& f = h.factor(t);
        EXPECT_LT((f.transpose() * f - Eigen::MatrixXd::Identity(f.cols(), f.cols())).norm(), 1e-12) << "node " << t;
    }
    EXPECT_LT(distance(ht_to_dense(h), dense_linear_combine(2.0, a, 0.0, a)), 1e-12 * a.norm());
}

TEST_P(HTreeTest, NodeSingularValuesMatchUnfoldings) {
    std::mt19937_64 rng(14);
    const auto& p = GetParam();
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const DenseTensor a = random_tensor(rng, p.dims);
    const HTensor h = ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor;
    const auto sv = ht_node_singular_values(h);
    for (int t = 1; t < tree->node_count(); ++t) {
        const Eigen::VectorXd ref =
            Eigen::JacobiSVD<Eigen::MatrixXd>(oracle::unfold(a.data(), p.dims, tree->node(t).modes.modes())).singularValues();
        const Index k = std::min(ref.size(), sv[static_cast<std::size_t>(t)].size());
        EXPECT_LT((sv[static_cast<std::size_t>(t)].head(k) - ref.head(k)).norm(), 1e-11 * ref[0]) << "node " << t;
    }
}

TEST_P(HTreeTest, ToleranceTruncationGuarantee) {
    std::mt19937_64 rng(15);
    const auto& p = GetParam();
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const DenseTensor a = low_rank_tensor(rng, p.dims, 5);
    const HTensor h = ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor;
    for (double rel : {1e-1, 1e-2, 1e-3, 1e-6}) {
        const double eps = rel * a.norm();
        const Truncated tr = ht_truncate(h, TruncationControl::tolerance(eps));
        const double err = distance(ht_to_dense(tr.tensor), a);
        EXPECT_LE(tr.error_estimate, eps);
        EXPECT_LE(err, eps + 1e-13 * a.norm());
        EXPECT_LE(err, tr.error_estimate + 1e-13 * a.norm());
    }
}

TEST_P(HTreeTest, FixedRankRespectsCaps) {
    std::mt19937_64 rng(16);
    const auto& p = GetParam();
    const auto tree = make_tree(p.tree, static_cast<int>(p.dims.size()));
    const DenseTensor a = random_tensor(rng, p.dims);
    for (Index cap : {1, 2, 3}) {
        const Truncated tr = ht_from_dense(a, tree, TruncationControl::fixed_rank(cap));
        EXPECT_LE(tr.tensor.max_rank(), cap);
        const Truncated tr2 = ht_truncate(ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor,
                                          TruncationControl::fixed_rank(cap));
        EXPECT_LE(tr2.tensor.max_rank(), cap);
        EXPECT_LE(distance(ht_to_dense(tr2.tensor), a), tr2.error_estimate + 1e-12 * a.norm());
    }
}

INSTANTIATE_TEST_SUITE_P(Trees, HTreeTest,
                         ::testing::Values(TreeCase{"balanced", {4, 5}}, TreeCase{"balanced", {3, 4, 5}},
                                           TreeCase{"linear", {3, 4, 5}}, TreeCase{"balanced", {3, 2, 4, 3}},
                                           TreeCase{"linear", {3, 2, 4, 3}}, TreeCase{"balanced", {2, 3, 2, 3, 2}},
                                           TreeCase{"linear", {2, 3, 2, 3, 2}}),
                         [](const auto& info) {
                             return info.param.tree + "_d" + std::to_string(info.param.dims.size());
                         });

TEST(HTensor, ZeroToleranceReturnsInputUnchanged) {
    std::mt19937_64 rng(20);
    const auto tree = make_tree("balanced", 3);
    const HTensor h = ht_from_dense(random_tensor(rng, {3, 3, 3}), tree, TruncationControl::tolerance(0.0)).tensor;
    const HTensor doubled = ht_linear_combine(1.0, h, 1.0, h);
    const Truncated tr = ht_truncate(doubled, TruncationControl::tolerance(0.0));
    EXPECT_EQ(tr.error_estimate, 0.0);
    ASSERT_EQ(tr.tensor.ranks(), doubled.ranks());
    for (int t = 0; t < tree->node_count(); ++t) EXPECT_EQ(tr.tensor.factor(t), doubled.factor(t));
}

TEST(HTensor, MatrixCaseMatchesEckartYoung) {
    std::mt19937_64 rng(21);
    const auto tree = make_tree("balanced", 2);
    const DenseTensor a = random_tensor(rng, {7, 6});
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(oracle::unfold(a.data(), {7, 6}, {0})).singularValues();
    for (Index r = 1; r <= 5; ++r) {
        const Truncated tr = ht_from_dense(a, tree, TruncationControl::fixed_rank(r));
        const double best = s.tail(s.size() - r).norm();
        EXPECT_NEAR(distance(ht_to_dense(tr.tensor), a), best, 1e-11 * best);
        EXPECT_NEAR(tr.error_estimate, best, 1e-11 * best);
    }
}

TEST(HTensor, QuasiOptimalAgainstLowerBound) {
    std::mt19937_64 rng(22);
    for (int d = 2; d <= 4; ++d) {
        const Dims dims(static_cast<std::size_t>(d), 4);
        const auto tree = make_tree("balanced", d);
        const DenseTensor a = random_tensor(rng, dims);
        const Truncated tr = ht_from_dense(a, tree, TruncationControl::fixed_rank(2));
        std::vector<std::vector<int>> sets;
        std::vector<Index> ranks;
        for (int t = 1; t < tree->node_count(); ++t) {
            sets.push_back(tree->node(t).modes.modes());
            ranks.push_back(tr.tensor.rank(t));
        }
        const double lb = oracle::best_error_lower_bound(a.data(), dims, sets, ranks);
        EXPECT_LE(distance(ht_to_dense(tr.tensor), a), TruncationControl::quasi_optimality_factor(d) * lb * (1 + 1e-12));
    }
}

TEST(HTensor, ContractionsMatchDense) {
    std::mt19937_64 rng(23);
    const Dims dims{3, 4, 2, 3};
    const auto tree = make_tree("balanced", 4);
    const DenseTensor a = low_rank_tensor(rng, dims, 3);
    const HTensor h = ht_from_dense(a, tree, TruncationControl::tolerance(0.0)).tensor;
    std::vector<Eigen::VectorXd> w;
    for (Index n : dims) w.push_back(oracle::random_vector(rng, n));
    double full = 0.0;
    for (Index lin = 0; lin < a.size(); ++lin) {
        const auto idx = oracle::unravel(lin, dims);
        double p = a.data()[lin];
        for (std::size_t k = 0; k < 4; ++k) p *= w[k][idx[k]];
        full += p;
    }
    EXPECT_NEAR(ht_contract_all(h, w), full, 1e-12 * a.norm());

    // keep modes 0 and 1
    const DenseTensor part = ht_contract_modes(h, {std::nullopt, std::nullopt, w[2], w[3]});
    ASSERT_EQ(part.dims(), (Dims{3, 4}));
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(3, 4);
    for (Index lin = 0; lin < a.size(); ++lin) {
        const auto idx = oracle::unravel(lin, dims);
        ref(idx[0], idx[1]) += a.data()[lin] * w[2][idx[2]] * w[3][idx[3]];
    }
    EXPECT_LT((Eigen::Map<const Eigen::MatrixXd>(part.data().data(), 3, 4) - ref).norm(), 1e-12 * a.norm());
}

TEST(HTensor, RankOneAndZeros) {
    const auto tree = make_tree("linear", 3);
    const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(3, 1, 3), b = Eigen::VectorXd::Ones(2),
                          c = Eigen::VectorXd::LinSpaced(4, -1, 2);
    const DenseTensor t = ht_to_dense(HTensor::rank_one(tree, {a, b, c}));
    EXPECT_DOUBLE_EQ(t({2, 1, 3}), 3.0 * 1.0 * 2.0);
    EXPECT_EQ(ht_to_dense(HTensor::zeros(tree, {3, 2, 4})).norm(), 0.0);
}

TEST(HTensor, RejectsBadInput) {
    const auto tree = make_tree("balanced", 2);
    EXPECT_THROW(HTensor(tree, {3, 3}, {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(3, 1),
                                        Eigen::MatrixXd::Ones(2, 1)}),
                 InputError);
    EXPECT_THROW(TruncationControl::tolerance(-1.0), InputError);
    EXPECT_THROW(TruncationControl::fixed_rank(0), InputError);
    EXPECT_THROW(make_tree("bushy", 3), InputError);
}

TEST(DimensionTree, BalancedSplitsLeftHeavy) {
    const auto t = make_tree("balanced", 3);
    EXPECT_EQ(t->node_count(), 5);
    EXPECT_EQ(t->node(t->node(0).left).modes, (ModeSet{0, 1}));
    EXPECT_EQ(t->node(t->node(0).right).modes, (ModeSet{2}));
    for (int k = 0; k < 3; ++k) EXPECT_EQ(t->node(t->leaf_of_mode(k)).modes, (ModeSet{k}));
    const auto l = make_tree("linear", 4);
    EXPECT_EQ(l->node(l->node(0).left).modes, (ModeSet{0}));
    for (int i = 1; i < l->node_count(); ++i) EXPECT_LT(l->node(i).parent, i);
}

TEST(HTensorSuites, TruncationSuiteSmoke) {
    const SuiteReport rep = suite_truncation(5, 60);
    EXPECT_TRUE(rep.passed()) << (rep.failure_notes.empty() ? "" : rep.failure_notes.front());
}

TEST(HTensorSuites, QuasiOptimalitySuiteSmoke) {
    const SuiteReport rep = suite_quasi_optimality(6, 30);
    EXPECT_TRUE(rep.passed()) << (rep.failure_notes.empty() ? "" : rep.failure_notes.front());
}
