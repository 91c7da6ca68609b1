#include "htstep/matrix_manifold.hpp"

#include "htstep/errors.hpp"
#include "htstep/htensor.hpp"

#include <cmath>
#include <string>

namespace htstep {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void fix_signs(MatrixXd& q, MatrixXd& v) {
    for (Index j = 0; j < q.cols(); ++j) {
        Index imax = 0;
        q.col(j).cwiseAbs().maxCoeff(&imax);
        if (q(imax, j) < 0.0) {
            q.col(j) *= -1.0;
            v.col(j) *= -1.0;
        }
    }
}

void require_shape(const SVDTriple& f, const MatrixXd& v, const char* what) {
    if (v.rows() != f.Q.rows() || v.cols() != f.V.rows())
        throw InputError(std::string(what) + ": matrix shape does not match the factorization");
}

double slope(double x0, double y0, double x1, double y1) {
    return (std::log(y1) - std::log(y0)) / (std::log(x1) - std::log(x0));
}

}  // namespace

MatrixXd SVDTriple::to_matrix() const { return Q * sigma.asDiagonal() * V.transpose(); }

SVDTriple svd_triple(const MatrixXd& m, Index r) {
    if (r < 1 || r > std::min(m.rows(), m.cols()))
        throw InputError("rank " + std::to_string(r) + " out of range for a " + std::to_string(m.rows()) + " x " +
                         std::to_string(m.cols()) + " matrix");
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SVDTriple f{svd.matrixU().leftCols(r), svd.singularValues().head(r), svd.matrixV().leftCols(r)};
    fix_signs(f.Q, f.V);
    return f;
}

BestTruncation best_truncate_matrix(const MatrixXd& m, Index r) {
    if (r < 1 || r > std::min(m.rows(), m.cols())) throw InputError("truncation rank out of range");
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    BestTruncation out;
    out.factors = {svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
    fix_signs(out.factors.Q, out.factors.V);
    out.approx = out.factors.to_matrix();
    out.error = s.tail(s.size() - r).norm();
    return out;
}

MatrixXd tangent_project(const SVDTriple& f, const MatrixXd& v) {
    require_shape(f, v, "tangent_project");
    const MatrixXd qv = f.Q * (f.Q.transpose() * v);
    const MatrixXd vv = (v * f.V) * f.V.transpose();
    const MatrixXd qvv = (qv * f.V) * f.V.transpose();
    return qv + vv - qvv;
}

double normal_component_norm(const SVDTriple& f, const MatrixXd& v) { return (v - tangent_project(f, v)).norm(); }

MatrixXd h_matrix(const VectorXd& sigma) {
    const Index r = sigma.size();
    MatrixXd h = MatrixXd::Zero(r, r);
    const double scale = r > 0 ? sigma.cwiseAbs2().maxCoeff() : 0.0;
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < r; ++j) {
            if (i == j) continue;
            const double gap = sigma[j] * sigma[j] - sigma[i] * sigma[i];
            if (std::abs(gap) <= 1e-14 * scale)
                throw NumericalError("degenerate spectrum: singular values " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide");
            h(i, j) = 1.0 / gap;
        }
    }
    return h;
}

SVDRates svd_rhs(const SVDTriple& f, const MatrixXd& n_val) {
    require_shape(f, n_val, "svd_rhs");
    if (f.sigma.minCoeff() <= 0.0) throw NumericalError("svd_rhs needs positive singular values");
    const MatrixXd h = h_matrix(f.sigma);
    const auto sig = f.sigma.asDiagonal();
    const VectorXd inv = f.sigma.cwiseInverse();
    const MatrixXd core = f.Q.transpose() * n_val * f.V;  // Q^T N V
    const MatrixXd nv = n_val * f.V;
    const MatrixXd ntq = n_val.transpose() * f.Q;

    SVDRates rates;
    rates.dsigma = core.diagonal();
    const MatrixXd xq = core * sig + sig * core.transpose();
    const MatrixXd xv = sig * core + core.transpose() * sig;
    rates.dQ = f.Q * h.cwiseProduct(xq) + (nv - f.Q * (f.Q.transpose() * nv)) * inv.asDiagonal();
    rates.dV = f.V * h.cwiseProduct(xv) + (ntq - f.V * (f.V.transpose() * ntq)) * inv.asDiagonal();
    return rates;
}

SVDTriple svd_perturb_step(const SVDTriple& f, const MatrixXd& n_val, double dt) {
    const SVDRates r = svd_rhs(f, n_val);
    return {f.Q + dt * r.dQ, f.sigma + dt * r.dsigma, f.V + dt * r.dV};
}

DORates do_rhs(const DOState& s, const MatrixXd& n_val) {
    if (n_val.rows() != s.W.rows() || n_val.cols() != s.B.rows())
        throw InputError("do_rhs: matrix shape does not match the factorization");
    Eigen::JacobiSVD<MatrixXd> svd(s.A);
    const VectorXd& sv = svd.singularValues();
    const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
    if (!(smin > 1e-13 * sv[0]))
        throw NumericalError("coefficient matrix A is singular to working precision (sigma_min = " +
                             std::to_string(smin) + ")");
    const Eigen::PartialPivLU<MatrixXd> lu(s.A);
    const MatrixXd nb = n_val * s.B;
    const MatrixXd ntw = n_val.transpose() * s.W;
    DORates r;
    r.dA = s.W.transpose() * nb;
    // X A^{-1} = (A^{-T} X^T)^T
    const MatrixXd a_inv_t = lu.transpose().solve(MatrixXd::Identity(s.A.rows(), s.A.cols()));
    const MatrixXd a_inv = a_inv_t.transpose();
    r.dW = (nb - s.W * (s.W.transpose() * nb)) * a_inv;
    r.dB = (ntw - s.B * (s.B.transpose() * ntw)) * a_inv_t;
    return r;
}

double consistency_gap(const SVDTriple& f, const MatrixXd& v, double dt) {
    require_shape(f, v, "consistency_gap");
    if (dt == 0.0) return 0.0;
    const MatrixXd g = f.to_matrix();
    const MatrixXd stepped = best_truncate_matrix(g + dt * v, f.rank()).approx;
    return (stepped - (g + dt * tangent_project(f, v))).norm();
}

std::vector<double> default_equivalence_sweep() {
    std::vector<double> dts;
    for (int e = 4; e <= 12; ++e) dts.push_back(std::ldexp(1.0, -e));
    return dts;
}

bool grows_as_dt_shrinks(const std::vector<double>& dts, const std::vector<double>& raw,
                         const std::vector<double>& ratio, double floor) {
    const std::size_t n = dts.size();
    if (n < 3) throw InputError("boundedness verdict needs at least three step sizes");
    for (std::size_t i = n - 3; i < n; ++i)
        if (!(raw[i] > floor)) return false;
    return slope(dts[n - 3], ratio[n - 3], dts[n - 1], ratio[n - 1]) < -0.5;
}

EquivalenceReport equivalence_check(const SVDTriple& f, const std::function<MatrixXd(double)>& v,
                                    const std::vector<double>& dts) {
    const MatrixXd g = f.to_matrix();
    auto tree = make_tree("balanced", 2);
    EquivalenceReport rep;
    rep.dts = dts;
    std::vector<double> raw_k, raw_m, raw_n;
    double vscale = 0.0;
    for (double dt : dts) {
        if (!(dt > 0.0)) throw InputError("equivalence sweep needs positive step sizes");
        const MatrixXd vd = v(dt);
        require_shape(f, vd, "equivalence_check");
        vscale = std::max(vscale, vd.norm());
        const MatrixXd moved = g + dt * vd;
        const double normal = normal_component_norm(f, vd);
        const double m = best_truncate_matrix(moved, f.rank()).error;
        const DenseTensor dense({moved.rows(), moved.cols()}, Eigen::Map<const VectorXd>(moved.data(), moved.size()));
        const double nerr = ht_from_dense(dense, tree, TruncationControl::fixed_rank(f.rank())).error_estimate;
        raw_k.push_back(normal * dt);
        raw_m.push_back(m);
        raw_n.push_back(nerr);
        rep.k_hat.push_back(normal / dt);
        rep.m_hat.push_back(m / (dt * dt));
        rep.n_hat.push_back(nerr / (dt * dt));
    }
    // Displacements below this are roundoff, not evidence of growth.
    const double floor = 1e-10 * std::max(vscale, g.norm());
    rep.k_bounded = !grows_as_dt_shrinks(dts, raw_k, rep.k_hat, floor);
    rep.m_bounded = !grows_as_dt_shrinks(dts, raw_m, rep.m_hat, floor);
    rep.n_bounded = !grows_as_dt_shrinks(dts, raw_n, rep.n_hat, floor);
    return rep;
}

EquivalenceReport equivalence_check(const SVDTriple& f, const MatrixXd& v, const std::vector<double>& dts) {
    return equivalence_check(f, [&](double) { return v; }, dts);
}

}  // namespace htstep
