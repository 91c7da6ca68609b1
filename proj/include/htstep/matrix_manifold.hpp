#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace htstep {

/// Rank-r factorization Q * diag(sigma) * V^T with orthonormal Q, V and sigma
/// sorted descending. Each column of Q has its largest-magnitude entry positive.
struct SVDTriple {
    Eigen::MatrixXd Q;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd V;

    Eigen::Index rank() const { return sigma.size(); }
    Eigen::MatrixXd to_matrix() const;
};

/// Leading r singular triplets of m with the sign convention applied.
SVDTriple svd_triple(const Eigen::MatrixXd& m, Eigen::Index r);

struct BestTruncation {
    Eigen::MatrixXd approx;
    SVDTriple factors;
    /// sqrt(sum_{i>r} sigma_i^2)
    double error = 0.0;
};

BestTruncation best_truncate_matrix(const Eigen::MatrixXd& m, Eigen::Index r);

/// Q Q^T v + v V V^T - Q Q^T v V V^T
Eigen::MatrixXd tangent_project(const SVDTriple& f, const Eigen::MatrixXd& v);

double normal_component_norm(const SVDTriple& f, const Eigen::MatrixXd& v);

/// H[i,j] = 1 / (sigma_j^2 - sigma_i^2) off the diagonal; throws NumericalError for
/// repeated singular values.
Eigen::MatrixXd h_matrix(const Eigen::VectorXd& sigma);

/// First-order update of (Q, Sigma, V) under f -> f + dt * n_val.
SVDTriple svd_perturb_step(const SVDTriple& f, const Eigen::MatrixXd& n_val, double dt);

struct SVDRates {
    Eigen::MatrixXd dQ;
    Eigen::VectorXd dsigma;
    Eigen::MatrixXd dV;
};

/// Time derivatives of the SVD factors for f' = n_val.
SVDRates svd_rhs(const SVDTriple& f, const Eigen::MatrixXd& n_val);

/// Factorization f = W A B^T with orthonormal W, B and invertible A.
struct DOState {
    Eigen::MatrixXd W;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;

    Eigen::MatrixXd to_matrix() const { return W * A * B.transpose(); }
};

struct DORates {
    Eigen::MatrixXd dW;
    Eigen::MatrixXd dA;
    Eigen::MatrixXd dB;
};

/// A' = W^T N B, W' = (I - W W^T) N B A^{-1}, B' = (I - B B^T) N^T W A^{-T}.
DORates do_rhs(const DOState& s, const Eigen::MatrixXd& n_val);

/// || best_truncate(f + dt v, r) - (f + dt P_f v) ||
double consistency_gap(const SVDTriple& f, const Eigen::MatrixXd& v, double dt);

/// Boundedness of the normal-component and truncation-error ratios as dt -> 0.
struct EquivalenceReport {
    std::vector<double> dts;
    /// ||(I - P_f) v(dt)|| / dt
    std::vector<double> k_hat;
    /// ||(f + dt v) - T_best(f + dt v)|| / dt^2
    std::vector<double> m_hat;
    /// Same with node-wise SVD truncation in HT format.
    std::vector<double> n_hat;
    bool k_bounded = true;
    bool m_bounded = true;
    bool n_bounded = true;

    bool agree() const { return k_bounded == m_bounded && m_bounded == n_bounded; }
};

/// dyadic sweep 2^-4 .. 2^-12
std::vector<double> default_equivalence_sweep();

EquivalenceReport equivalence_check(const SVDTriple& f, const std::function<Eigen::MatrixXd(double)>& v,
                                    const std::vector<double>& dts);
EquivalenceReport equivalence_check(const SVDTriple& f, const Eigen::MatrixXd& v, const std::vector<double>& dts);

/// True when y(dt) grows as dt -> 0: the last three points are above `floor` and the
/// log-log slope between them is below -0.5.
bool grows_as_dt_shrinks(const std::vector<double>& dts, const std::vector<double>& raw,
                         const std::vector<double>& ratio, double floor);

}  // namespace htstep
