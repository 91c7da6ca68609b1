#include "htstep/spectral.hpp"

#include "htstep/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace htstep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_grid_dims(const Dims& dims, const PeriodicGrid& grid) {
    for (Index n : dims)
        if (n != grid.n()) throw InputError("tensor extent " + std::to_string(n) + " does not match grid size");
}

}  // namespace

PeriodicGrid::PeriodicGrid(Index n) : n_(n) {
    if (n < 4 || n % 2 != 0) throw InputError("periodic grid needs an even n >= 4, got " + std::to_string(n));
}

double PeriodicGrid::spacing() const { return 2.0 * std::numbers::pi / static_cast<double>(n_); }

double PeriodicGrid::node(Index j) const { return spacing() * static_cast<double>(j); }

VectorXd PeriodicGrid::nodes() const {
    VectorXd x(n_);
    for (Index j = 0; j < n_; ++j) x[j] = node(j);
    return x;
}

VectorXd PeriodicGrid::sample(const std::function<double(double)>& fn) const {
    VectorXd v(n_);
    for (Index j = 0; j < n_; ++j) v[j] = fn(node(j));
    return v;
}

MatrixXd diff_matrix(Index n, int order) {
    const PeriodicGrid grid(n);
    if (order != 1 && order != 2) throw InputError("differentiation order must be 1 or 2");
    const double h = grid.spacing();
    MatrixXd d = MatrixXd::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index k = 0; k < n; ++k) {
            const Index m = j - k;
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            if (m == 0) {
                if (order == 2) d(j, k) = -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            const double half = 0.5 * static_cast<double>(m) * h;
            if (order == 1) {
                d(j, k) = 0.5 * sign / std::tan(half);
            } else {
                const double s = std::sin(half);
                d(j, k) = -0.5 * sign / (s * s);
            }
        }
    }
    return d;
}

MatrixXd diag_of(const VectorXd& samples) { return samples.asDiagonal(); }

double l2_scale(const PeriodicGrid& grid, int d) { return std::pow(grid.weight(), 0.5 * d); }

double quad_integral(const DenseTensor& t, const PeriodicGrid& grid) {
    require_grid_dims(t.dims(), grid);
    return std::pow(grid.weight(), t.order()) * t.data().sum();
}

double quad_integral(const HTensor& h, const PeriodicGrid& grid) {
    require_grid_dims(h.dims(), grid);
    const std::vector<VectorXd> w(h.dims().size(), VectorXd::Constant(grid.n(), grid.weight()));
    return ht_contract_all(h, w);
}

double l2_norm(const DenseTensor& t, const PeriodicGrid& grid) {
    require_grid_dims(t.dims(), grid);
    return l2_scale(grid, t.order()) * t.norm();
}

double l2_norm(const HTensor& h, const PeriodicGrid& grid) {
    require_grid_dims(h.dims(), grid);
    return l2_scale(grid, h.order()) * ht_norm(h);
}

}  // namespace htstep
