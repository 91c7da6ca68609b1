#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace htstep {

using Index = Eigen::Index;
using Dims = std::vector<Index>;

/// Default cap on the number of entries of any dense tensor.
inline constexpr std::size_t kDefaultDenseElementBudget = 10'000'000;

std::size_t dense_element_budget();
void set_dense_element_budget(std::size_t elements);

/// Product of dims; throws InputError on empty dims or non-positive extents.
Index checked_element_count(const Dims& dims);

/// Ordered set of zero-based mode indices.
class ModeSet {
public:
    ModeSet() = default;
    ModeSet(std::initializer_list<int> modes);
    explicit ModeSet(std::vector<int> modes);

    /// Modes lo, lo+1, ..., hi-1.
    static ModeSet range(int lo, int hi);

    const std::vector<int>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }
    bool empty() const { return modes_.empty(); }
    int front() const { return modes_.front(); }
    int back() const { return modes_.back(); }
    bool contains(int mode) const;

    /// Throws InputError unless every mode lies in [0, order).
    void validate(int order) const;

    /// Modes of {0..order-1} not in this set, ascending.
    ModeSet complement(int order) const;

    bool operator==(const ModeSet&) const = default;

private:
    std::vector<int> modes_;
};

/// d-way real array stored column-major: the linear index of (i_0, ..., i_{d-1})
/// is i_0 + n_0 * (i_1 + n_1 * (i_2 + ...)).
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Dims dims);
    DenseTensor(Dims dims, Eigen::VectorXd data);

    template <typename Fn>
    static DenseTensor from_function(Dims dims, Fn&& fn);

    const Dims& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }
    Index size() const { return data_.size(); }

    const Eigen::VectorXd& data() const { return data_; }
    Eigen::VectorXd& mutable_data() { return data_; }

    Index linear_index(std::span<const Index> idx) const;
    double operator()(std::span<const Index> idx) const { return data_[linear_index(idx)]; }
    double operator()(std::initializer_list<Index> idx) const;

    double norm() const { return data_.norm(); }

private:
    Dims dims_;
    Eigen::VectorXd data_;
};

template <typename Fn>
DenseTensor DenseTensor::from_function(Dims dims, Fn&& fn) {
    DenseTensor t(std::move(dims));
    std::vector<Index> idx(t.dims_.size(), 0);
    for (Index lin = 0; lin < t.size(); ++lin) {
        t.data_[lin] = fn(std::span<const Index>(idx));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (++idx[k] < t.dims_[k]) break;
            idx[k] = 0;
        }
    }
    return t;
}

/// Rows indexed column-major by the modes in `modes` (in their listed order),
/// columns column-major by the remaining modes in ascending order.
Eigen::MatrixXd matricize(const DenseTensor& t, const ModeSet& modes);

/// Inverse of matricize for a tensor of the given dims.
DenseTensor dematricize(const Eigen::MatrixXd& m, const Dims& dims, const ModeSet& modes);

/// Mode-k product: contracts mode k of t with the columns of A.
DenseTensor mode_apply(const DenseTensor& t, int mode, const Eigen::MatrixXd& a);

/// Multiplies every fiber along `mode` elementwise by `scale`.
DenseTensor mode_scale(const DenseTensor& t, int mode, const Eigen::VectorXd& scale);

DenseTensor dense_linear_combine(double alpha, const DenseTensor& x, double beta, const DenseTensor& y);

double inner(const DenseTensor& x, const DenseTensor& y);

}  // namespace htstep
