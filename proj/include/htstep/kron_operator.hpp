#pragma once

#include "htstep/dense_tensor.hpp"
#include "htstep/htensor.hpp"

#include <map>
#include <vector>

namespace htstep {

/// One per-mode factor of a Kronecker term. Identity factors are never materialized.
class ModeFactor {
public:
    enum class Kind { Identity, Diagonal, Dense };

    static ModeFactor identity(Index n);
    static ModeFactor diagonal(Eigen::VectorXd d);
    static ModeFactor dense(Eigen::MatrixXd a);

    Kind kind() const { return kind_; }
    Index size() const { return n_; }
    const Eigen::VectorXd& diag() const { return diag_; }
    const Eigen::MatrixXd& matrix() const { return dense_; }

    /// Explicit n x n matrix (tests and small diagnostics only).
    Eigen::MatrixXd to_matrix() const;

    /// A * x for a matrix x with n rows.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

    bool operator==(const ModeFactor& other) const;

private:
    Kind kind_ = Kind::Identity;
    Index n_ = 0;
    Eigen::VectorXd diag_;
    Eigen::MatrixXd dense_;
};

struct KronTerm {
    double coeff = 1.0;
    /// Index into the operator's per-mode factor table; 0 is always the identity.
    std::vector<int> factor_ids;
};

/// Sum of Kronecker products: N = sum_t coeff_t * A_{t,d-1} (x) ... (x) A_{t,0}, acting
/// on mode k of a tensor with A_{t,k}.
class KronSumOperator {
public:
    explicit KronSumOperator(Dims dims);

    /// Adds coeff * (x)_k A_k; modes absent from `factors` get the identity.
    void add_term(double coeff, const std::map<int, ModeFactor>& factors);

    const Dims& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<KronTerm>& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    const ModeFactor& factor(int mode, int id) const;
    std::size_t distinct_factor_count(int mode) const;

    /// Fully assembled matrix acting on the column-major vectorization (tiny sizes only).
    Eigen::MatrixXd assemble() const;

private:
    int intern(int mode, const ModeFactor& f);

    Dims dims_;
    std::vector<std::vector<ModeFactor>> table_;
    std::vector<KronTerm> terms_;
};

DenseTensor apply_dense(const KronSumOperator& op, const DenseTensor& t);

/// Exact application in HT format. Node ranks grow to at most
/// (number of distinct restricted terms at the node) * (input rank).
HTensor apply_ht(const KronSumOperator& op, const HTensor& h);

}  // namespace htstep
