#pragma once

#include "htstep/dense_tensor.hpp"
#include "htstep/dimension_tree.hpp"

#include <optional>
#include <vector>

namespace htstep {

/// Hierarchical Tucker tensor.
///
/// factor(t) for a leaf t is the frame U_t (n_k x r_t). For an internal node it is
/// the transfer tensor stored as an (r_l * r_r) x r_t matrix whose row a + r_l * b
/// holds entry (a, b) of the r_l x r_r slice B_t(:, :, j). The frame of an internal
/// node is U_t(:, j) = vec(U_l * B_t(:, :, j) * U_r^T). The root has rank 1.
class HTensor {
public:
    HTensor() = default;
    HTensor(TreePtr tree, Dims dims, std::vector<Eigen::MatrixXd> factors);

    /// Exact zero tensor with all ranks 1.
    static HTensor zeros(TreePtr tree, Dims dims);
    /// Rank-1 tensor v_0 (x) v_1 (x) ... (x) v_{d-1}.
    static HTensor rank_one(TreePtr tree, const std::vector<Eigen::VectorXd>& vectors);

    const DimensionTree& tree() const { return *tree_; }
    const TreePtr& tree_ptr() const { return tree_; }
    const Dims& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }

    const Eigen::MatrixXd& factor(int t) const { return factors_.at(static_cast<std::size_t>(t)); }
    Eigen::MatrixXd& mutable_factor(int t) { return factors_.at(static_cast<std::size_t>(t)); }
    const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }

    Index rank(int t) const { return factors_.at(static_cast<std::size_t>(t)).cols(); }
    std::vector<Index> ranks() const;
    Index max_rank() const;

    /// Number of stored doubles across all frames and transfer tensors.
    Index parameter_count() const;

    /// Throws InputError if factor shapes are inconsistent with the tree.
    void validate() const;

    HTensor scaled(double alpha) const;

private:
    TreePtr tree_;
    Dims dims_;
    std::vector<Eigen::MatrixXd> factors_;
};

/// Two-way slice B_t(:, :, j) of a transfer tensor.
inline Eigen::Map<const Eigen::MatrixXd> transfer_slice(const Eigen::MatrixXd& b, Index rl, Index rr, Index j) {
    return Eigen::Map<const Eigen::MatrixXd>(b.col(j).data(), rl, rr);
}

class TruncationControl {
public:
    enum class Kind { Tolerance, FixedRank };

    /// Absolute Frobenius tolerance on the whole tensor.
    static TruncationControl tolerance(double eps);
    /// Same cap at every node.
    static TruncationControl fixed_rank(Index cap);
    /// Per-node caps indexed like the tree nodes; the root entry is ignored.
    static TruncationControl fixed_rank(std::vector<Index> caps);

    Kind kind() const { return kind_; }
    double eps() const { return eps_; }
    Index cap(int node) const;

    /// sqrt(2d - 3): worst-case ratio between node-wise SVD truncation and best approximation.
    static double quasi_optimality_factor(int d);

private:
    Kind kind_ = Kind::Tolerance;
    double eps_ = 0.0;
    Index uniform_cap_ = 0;
    std::vector<Index> caps_;
};

struct Truncated {
    HTensor tensor;
    /// sqrt of the sum of squares of all discarded singular values.
    double error_estimate = 0.0;
};

DenseTensor ht_to_dense(const HTensor& h);

/// Contracts each mode k with weights[k] when present; returns the dense tensor over
/// the remaining modes (in ascending order). At least one mode must remain.
DenseTensor ht_contract_modes(const HTensor& h, const std::vector<std::optional<Eigen::VectorXd>>& weights);

/// Full contraction with one vector per mode.
double ht_contract_all(const HTensor& h, const std::vector<Eigen::VectorXd>& weights);

double ht_inner(const HTensor& x, const HTensor& y);
double ht_norm(const HTensor& h);

/// Exact alpha*x + beta*y with ranks r_x + r_y (no truncation).
HTensor ht_linear_combine(double alpha, const HTensor& x, double beta, const HTensor& y);

/// Same tensor with orthonormal frames at every non-root node.
HTensor ht_orthogonalize(const HTensor& h);

/// Node-wise SVD truncation of an HT tensor. In tolerance mode the result satisfies
/// ||h - result|| <= error_estimate <= eps; each node keeps at least rank 1.
Truncated ht_truncate(const HTensor& h, const TruncationControl& ctrl);

/// Hierarchical SVD of a dense tensor.
Truncated ht_from_dense(const DenseTensor& t, TreePtr tree, const TruncationControl& ctrl);

/// Singular values of the matricization at every non-root node (root entry empty),
/// computed from the HT format without densifying.
std::vector<Eigen::VectorXd> ht_node_singular_values(const HTensor& h);

}  // namespace htstep
