#pragma once

#include "htstep/dense_tensor.hpp"
#include "htstep/htensor.hpp"

#include <functional>

namespace htstep {

/// n equispaced nodes x_j = 2*pi*j/n on [0, 2*pi), n even and >= 4.
class PeriodicGrid {
public:
    explicit PeriodicGrid(Index n);

    Index n() const { return n_; }
    double spacing() const;
    /// Quadrature weight of the periodic trapezoidal rule (= spacing).
    double weight() const { return spacing(); }
    double node(Index j) const;
    Eigen::VectorXd nodes() const;
    Eigen::VectorXd sample(const std::function<double(double)>& fn) const;

private:
    Index n_;
};

/// Fourier pseudo-spectral differentiation matrix of order 1 or 2.
Eigen::MatrixXd diff_matrix(Index n, int order);

Eigen::MatrixXd diag_of(const Eigen::VectorXd& samples);

/// (2*pi/n)^d times the sum of all entries.
double quad_integral(const DenseTensor& t, const PeriodicGrid& grid);
double quad_integral(const HTensor& h, const PeriodicGrid& grid);

/// sqrt((2*pi/n)^d) times the Frobenius norm.
double l2_norm(const DenseTensor& t, const PeriodicGrid& grid);
double l2_norm(const HTensor& h, const PeriodicGrid& grid);
double l2_scale(const PeriodicGrid& grid, int d);

}  // namespace htstep
