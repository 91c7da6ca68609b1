#include "htstep/dense_tensor.hpp"

#include "htstep/errors.hpp"

#include <algorithm>
#include <atomic>
#include <string>

namespace htstep {

namespace {

std::atomic<std::size_t> g_budget{kDefaultDenseElementBudget};

void require_same_dims(const DenseTensor& x, const DenseTensor& y, const char* what) {
    if (x.dims() != y.dims())
        throw InputError(std::string(what) + ": tensor dims differ");
}

}  // namespace

std::size_t dense_element_budget() { return g_budget.load(); }

void set_dense_element_budget(std::size_t elements) { g_budget.store(elements); }

Index checked_element_count(const Dims& dims) {
    if (dims.empty()) throw InputError("tensor must have at least one mode");
    Index count = 1;
    for (Index n : dims) {
        if (n < 1) throw InputError("tensor extents must be positive");
        count *= n;
        if (static_cast<std::size_t>(count) > dense_element_budget())
            throw BudgetError("dense tensor exceeds element budget of " +
                              std::to_string(dense_element_budget()));
    }
    return count;
}

ModeSet::ModeSet(std::initializer_list<int> modes) : ModeSet(std::vector<int>(modes)) {}

ModeSet::ModeSet(std::vector<int> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw InputError("mode set must not be empty");
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (modes_[i] < 0) throw InputError("negative mode index");
        if (i > 0 && modes_[i] <= modes_[i - 1])
            throw InputError("mode set must be strictly increasing");
    }
}

ModeSet ModeSet::range(int lo, int hi) {
    std::vector<int> m;
    for (int k = lo; k < hi; ++k) m.push_back(k);
    return ModeSet(std::move(m));
}

bool ModeSet::contains(int mode) const {
    return std::binary_search(modes_.begin(), modes_.end(), mode);
}

void ModeSet::validate(int order) const {
    if (modes_.empty()) throw InputError("mode set must not be empty");
    if (modes_.back() >= order)
        throw InputError("mode index " + std::to_string(modes_.back()) +
                         " out of range for order " + std::to_string(order));
}

ModeSet ModeSet::complement(int order) const {
    std::vector<int> rest;
    for (int k = 0; k < order; ++k)
        if (!contains(k)) rest.push_back(k);
    ModeSet out;
    out.modes_ = std::move(rest);
    return out;
}

DenseTensor::DenseTensor(Dims dims)
    : dims_(std::move(dims)), data_(Eigen::VectorXd::Zero(checked_element_count(dims_))) {}

DenseTensor::DenseTensor(Dims dims, Eigen::VectorXd data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_element_count(dims_) != data_.size())
        throw InputError("data length does not match product of dims");
}

Index DenseTensor::linear_index(std::span<const Index> idx) const {
    if (idx.size() != dims_.size()) throw InputError("index has wrong number of modes");
    Index lin = 0;
    for (std::size_t k = idx.size(); k-- > 0;) {
        if (idx[k] < 0 || idx[k] >= dims_[k]) throw InputError("index out of range");
        lin = lin * dims_[k] + idx[k];
    }
    return lin;
}

double DenseTensor::operator()(std::initializer_list<Index> idx) const {
    return (*this)(std::span<const Index>(idx.begin(), idx.size()));
}

namespace {

// Strides of each mode within the row (or column) multi-index of a matricization.
struct UnfoldingMap {
    std::vector<Index> row_stride;  // per tensor mode, 0 if the mode is a column mode
    std::vector<Index> col_stride;
    Index rows = 1;
    Index cols = 1;
};

UnfoldingMap unfolding_map(const Dims& dims, const ModeSet& modes) {
    const int d = static_cast<int>(dims.size());
    modes.validate(d);
    UnfoldingMap map;
    map.row_stride.assign(d, 0);
    map.col_stride.assign(d, 0);
    for (int k : modes.modes()) {
        map.row_stride[k] = map.rows;
        map.rows *= dims[k];
    }
    const ModeSet rest = modes.complement(d);
    for (int k : rest.modes()) {
        map.col_stride[k] = map.cols;
        map.cols *= dims[k];
    }
    return map;
}

}  // namespace

Eigen::MatrixXd matricize(const DenseTensor& t, const ModeSet& modes) {
    const auto map = unfolding_map(t.dims(), modes);
    Eigen::MatrixXd m(map.rows, map.cols);
    const int d = t.order();
    std::vector<Index> idx(d, 0);
    Index row = 0, col = 0;
    for (Index lin = 0; lin < t.size(); ++lin) {
        m(row, col) = t.data()[lin];
        for (int k = 0; k < d; ++k) {
            if (++idx[k] < t.dims()[k]) {
                row += map.row_stride[k];
                col += map.col_stride[k];
                break;
            }
            row -= (idx[k] - 1) * map.row_stride[k];
            col -= (idx[k] - 1) * map.col_stride[k];
            idx[k] = 0;
        }
    }
    return m;
}

DenseTensor dematricize(const Eigen::MatrixXd& m, const Dims& dims, const ModeSet& modes) {
    const auto map = unfolding_map(dims, modes);
    if (m.rows() != map.rows || m.cols() != map.cols)
        throw InputError("matrix shape does not match the requested unfolding");
    DenseTensor t(dims);
    auto& data = t.mutable_data();
    const int d = t.order();
    std::vector<Index> idx(d, 0);
    Index row = 0, col = 0;
    for (Index lin = 0; lin < t.size(); ++lin) {
        data[lin] = m(row, col);
        for (int k = 0; k < d; ++k) {
            if (++idx[k] < dims[k]) {
                row += map.row_stride[k];
                col += map.col_stride[k];
                break;
            }
            row -= (idx[k] - 1) * map.row_stride[k];
            col -= (idx[k] - 1) * map.col_stride[k];
            idx[k] = 0;
        }
    }
    return t;
}

DenseTensor mode_apply(const DenseTensor& t, int mode, const Eigen::MatrixXd& a) {
    if (mode < 0 || mode >= t.order()) throw InputError("mode_apply: mode out of range");
    const Index n = t.dims()[mode];
    if (a.cols() != n) throw InputError("mode_apply: matrix column count does not match mode extent");
    Index left = 1, right = 1;
    for (int k = 0; k < mode; ++k) left *= t.dims()[k];
    for (int k = mode + 1; k < t.order(); ++k) right *= t.dims()[k];

    Dims out_dims = t.dims();
    out_dims[mode] = a.rows();
    DenseTensor out(out_dims);
    const Index m = a.rows();
    if (left == 1) {
        Eigen::Map<const Eigen::MatrixXd> x(t.data().data(), n, right);
        Eigen::Map<Eigen::MatrixXd> y(out.mutable_data().data(), m, right);
        y.noalias() = a * x;
        return out;
    }
    const Eigen::MatrixXd at = a.transpose();
    for (Index r = 0; r < right; ++r) {
        Eigen::Map<const Eigen::MatrixXd> x(t.data().data() + r * left * n, left, n);
        Eigen::Map<Eigen::MatrixXd> y(out.mutable_data().data() + r * left * m, left, m);
        y.noalias() = x * at;
    }
    return out;
}

DenseTensor mode_scale(const DenseTensor& t, int mode, const Eigen::VectorXd& scale) {
    if (mode < 0 || mode >= t.order()) throw InputError("mode_scale: mode out of range");
    const Index n = t.dims()[mode];
    if (scale.size() != n) throw InputError("mode_scale: scale length does not match mode extent");
    Index left = 1;
    for (int k = 0; k < mode; ++k) left *= t.dims()[k];
    DenseTensor out = t;
    auto& data = out.mutable_data();
    const Index block = left * n;
    for (Index base = 0; base < t.size(); base += block)
        for (Index j = 0; j < n; ++j) data.segment(base + j * left, left) *= scale[j];
    return out;
}

DenseTensor dense_linear_combine(double alpha, const DenseTensor& x, double beta, const DenseTensor& y) {
    require_same_dims(x, y, "dense_linear_combine");
    return DenseTensor(x.dims(), alpha * x.data() + beta * y.data());
}

double inner(const DenseTensor& x, const DenseTensor& y) {
    require_same_dims(x, y, "inner");
    return x.data().dot(y.data());
}

}  // namespace htstep
