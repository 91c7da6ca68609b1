#include "htstep/dense_tensor.hpp"
#include "htstep/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace htstep;

namespace {

DenseTensor random_tensor(std::mt19937_64& rng, const Dims& dims) {
    Index n = 1;
    for (Index d : dims) n *= d;
    return DenseTensor(dims, oracle::random_vector(rng, n));
}

}  // namespace

TEST(DenseTensor, ColumnMajorLinearIndex) {
    const DenseTensor t = DenseTensor::from_function({2, 3, 4}, [](std::span<const Index> i) {
        return static_cast<double>(i[0] + 10 * i[1] + 100 * i[2]);
    });
    EXPECT_EQ(t.data()[0], 0.0);
    EXPECT_EQ(t.data()[1], 1.0);
    EXPECT_EQ(t.data()[2], 10.0);
    EXPECT_EQ(t.data()[6], 100.0);
    EXPECT_EQ(t({1, 2, 3}), 321.0);
    EXPECT_EQ(t.linear_index(std::vector<Index>{1, 2, 3}), 1 + 2 * 2 + 3 * 6);
}

TEST(DenseTensor, MatricizeMatchesBruteForce) {
    std::mt19937_64 rng(1);
    const Dims dims{3, 2, 4, 5};
    const DenseTensor t = random_tensor(rng, dims);
    for (const std::vector<int>& rows : std::vector<std::vector<int>>{{0}, {1}, {3}, {0, 1}, {1, 3}, {0, 2, 3}}) {
        const Eigen::MatrixXd m = matricize(t, ModeSet(rows));
        const Eigen::MatrixXd ref = oracle::unfold(t.data(), dims, rows);
        ASSERT_EQ(m.rows(), ref.rows());
        ASSERT_EQ(m.cols(), ref.cols());
        EXPECT_EQ((m - ref).norm(), 0.0);
        const DenseTensor back = dematricize(m, dims, ModeSet(rows));
        EXPECT_EQ((back.data() - t.data()).norm(), 0.0);
    }
}

TEST(DenseTensor, ModeApplyMatchesKroneckerProduct) {
    std::mt19937_64 rng(2);
    const Dims dims{3, 4, 2};
    const DenseTensor t = random_tensor(rng, dims);
    for (int k = 0; k < 3; ++k) {
        std::vector<Eigen::MatrixXd> factors;
        Eigen::MatrixXd a = oracle::random_matrix(rng, dims[k], dims[k]);
        for (int j = 0; j < 3; ++j) factors.push_back(j == k ? a : Eigen::MatrixXd::Identity(dims[j], dims[j]));
        const Eigen::VectorXd expect = oracle::kron_all(factors) * t.data();
        EXPECT_LT((mode_apply(t, k, a).data() - expect).norm(), 1e-12 * expect.norm());
        const Eigen::VectorXd s = oracle::random_vector(rng, dims[k]);
        EXPECT_LT((mode_scale(t, k, s).data() - mode_apply(t, k, s.asDiagonal().toDenseMatrix()).data()).norm(), 1e-13);
    }
}

TEST(DenseTensor, ModeApplyCanChangeExtent) {
    std::mt19937_64 rng(3);
    const DenseTensor t = random_tensor(rng, {3, 4});
    const Eigen::MatrixXd a = oracle::random_matrix(rng, 5, 4);
    const DenseTensor out = mode_apply(t, 1, a);
    EXPECT_EQ(out.dims(), (Dims{3, 5}));
    const Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(t.data().data(), 3, 4) * a.transpose();
    EXPECT_LT((out.data() - Eigen::Map<const Eigen::VectorXd>(m.data(), m.size())).norm(), 1e-13);
}

TEST(DenseTensor, LinearCombineAndInner) {
    std::mt19937_64 rng(4);
    const DenseTensor x = random_tensor(rng, {2, 3, 2}), y = random_tensor(rng, {2, 3, 2});
    const DenseTensor z = dense_linear_combine(2.0, x, -0.5, y);
    EXPECT_LT((z.data() - (2.0 * x.data() - 0.5 * y.data())).norm(), 1e-14);
    EXPECT_NEAR(inner(x, y), x.data().dot(y.data()), 1e-13);
    EXPECT_THROW(dense_linear_combine(1.0, x, 1.0, random_tensor(rng, {2, 3})), InputError);
}

TEST(ModeSet, ValidationAndComplement) {
    EXPECT_THROW(ModeSet({2, 1}), InputError);
    EXPECT_THROW(ModeSet(std::vector<int>{}), InputError);
    const ModeSet s{1, 3};
    EXPECT_EQ(s.complement(5), (ModeSet{0, 2, 4}));
    EXPECT_TRUE(s.contains(3));
    EXPECT_FALSE(s.contains(2));
    EXPECT_THROW(s.validate(3), InputError);
    EXPECT_EQ(ModeSet::range(2, 5), (ModeSet{2, 3, 4}));
}

TEST(DenseTensor, ElementBudget) {
    const std::size_t old = dense_element_budget();
    set_dense_element_budget(100);
    EXPECT_THROW(DenseTensor({20, 20}), BudgetError);
    EXPECT_NO_THROW(DenseTensor({10, 10}));
    set_dense_element_budget(old);
    EXPECT_THROW(checked_element_count({3, 0}), InputError);
}
