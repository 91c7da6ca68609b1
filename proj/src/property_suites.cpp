#include "htstep/property_suites.hpp"

#include "htstep/errors.hpp"
#include "htstep/htensor.hpp"
#include "htstep/matrix_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace htstep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SuiteReport::fail(std::string note) {
    ++failures;
    if (failure_notes.size() < 20) failure_notes.push_back(std::move(note));
}

void SuiteReport::metric(const std::string& key, double value) {
    for (auto& [k, v] : metrics)
        if (k == key) {
            v = value;
            return;
        }
    metrics.emplace_back(key, value);
}

namespace {

using Rng = std::mt19937_64;

// Every dense verification below is itself a floating-point computation; this is
// the allowance for its roundoff relative to the tensor norm.
constexpr double kRoundoff = 1e-13;

Index uniform_int(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

MatrixXd gaussian(Rng& rng, Index rows, Index cols) {
    std::normal_distribution<double> nd;
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
    return m;
}

MatrixXd orthonormal(Rng& rng, Index rows, Index cols) {
    Eigen::HouseholderQR<MatrixXd> qr(gaussian(rng, rows, cols));
    return qr.householderQ() * MatrixXd::Identity(rows, cols);
}

// Random HT tensor; column j of every non-root factor is scaled by decay^j so the
// node spectra decay and tolerance truncation has something to do.
HTensor random_ht(Rng& rng, const TreePtr& tree, const Dims& dims, double decay, Index max_rank) {
    const int nodes = tree->node_count();
    std::vector<Index> rank(static_cast<std::size_t>(nodes), 1);
    std::vector<Index> size(static_cast<std::size_t>(nodes), 1);
    std::vector<MatrixXd> factors(static_cast<std::size_t>(nodes));
    for (int t = nodes - 1; t >= 0; --t) {
        const auto& node = tree->node(t);
        const auto ut = static_cast<std::size_t>(t);
        if (node.is_leaf()) {
            size[ut] = dims[static_cast<std::size_t>(node.modes.modes().front())];
            rank[ut] = uniform_int(rng, 1, std::min(size[ut], max_rank));
            factors[ut] = gaussian(rng, size[ut], rank[ut]);
        } else {
            const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
            size[ut] = size[l] * size[r];
            rank[ut] = t == 0 ? 1 : uniform_int(rng, 1, std::min({rank[l] * rank[r], size[ut], max_rank}));
            factors[ut] = gaussian(rng, rank[l] * rank[r], rank[ut]);
        }
        if (t != 0)
            for (Index j = 0; j < rank[ut]; ++j) factors[ut].col(j) *= std::pow(decay, static_cast<double>(j));
    }
    return HTensor(tree, dims, std::move(factors));
}

Dims random_dims(Rng& rng, int d, Index lo, Index hi) {
    Dims dims;
    for (int k = 0; k < d; ++k) dims.push_back(uniform_int(rng, lo, hi));
    return dims;
}

// Rank-r matrix with singular values r, r-1, ..., 1 plus jitter: gaps stay >= 0.5.
SVDTriple random_separated(Rng& rng, Index n1, Index n2, Index r, double scale = 1.0) {
    VectorXd s(r);
    for (Index i = 0; i < r; ++i) s[i] = scale * (static_cast<double>(r - i) + uniform(rng, 0.0, 0.5));
    const MatrixXd m = orthonormal(rng, n1, r) * s.asDiagonal() * orthonormal(rng, n2, r).transpose();
    return svd_triple(m, r);
}

MatrixXd unit_gaussian(Rng& rng, Index rows, Index cols) {
    MatrixXd m = gaussian(rng, rows, cols);
    return m / m.norm();
}

double dense_distance(const DenseTensor& a, const DenseTensor& b) { return dense_linear_combine(1.0, a, -1.0, b).norm(); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

SuiteReport named(std::string name) {
    SuiteReport rep;
    rep.name = std::move(name);
    return rep;
}

std::string case_label(long c) { return "case " + std::to_string(c) + ": "; }

template <typename Fn>
void guarded(SuiteReport& rep, long c, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        rep.fail(case_label(c) + "threw: " + e.what());
    }
}

}  // namespace

SuiteReport suite_truncation(std::uint64_t seed, long cases) {
    SuiteReport rep = named("truncation");
    Rng rng(seed);
    double worst_ratio = 0.0, worst_ey = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const int d = static_cast<int>(uniform_int(rng, 2, 4));
            const Dims dims = random_dims(rng, d, 2, 8);
            const auto tree = make_tree(uniform_int(rng, 0, 1) ? "balanced" : "linear", d);
            const HTensor h = random_ht(rng, tree, dims, uniform(rng, 0.2, 1.0), 6);
            const DenseTensor dense = ht_to_dense(h);
            const double nrm = dense.norm();
            const double eps = nrm * std::pow(10.0, uniform(rng, -4.0, 0.0));
            const Truncated tr = ht_truncate(h, TruncationControl::tolerance(eps));
            const double err = dense_distance(dense, ht_to_dense(tr.tensor));
            const double slack = kRoundoff * nrm;
            worst_ratio = std::max(worst_ratio, err / eps);
            std::ostringstream why;
            if (!(tr.error_estimate <= eps)) why << "estimate " << tr.error_estimate << " > eps " << eps << "; ";
            if (!(err <= eps + slack)) why << "error " << err << " > eps " << eps << "; ";
            if (!(err <= tr.error_estimate + slack)) why << "error " << err << " > estimate " << tr.error_estimate << "; ";
            if (d == 2) {
                const Index r = tr.tensor.rank(1);
                const double best = best_truncate_matrix(matricize(dense, ModeSet{0}), r).error;
                const double gap = std::abs(err - best);
                worst_ey = std::max(worst_ey, gap / (1e-11 * best + slack));
                if (!(gap <= 1e-11 * best + slack)) why << "rank-" << r << " error " << err << " vs best " << best << "; ";
            }
            if (!why.str().empty()) rep.fail(case_label(c) + why.str());
        });
    }
    rep.metric("max_error_over_eps", worst_ratio);
    rep.metric("max_eckart_young_gap_over_allowance", worst_ey);
    return rep;
}

SuiteReport suite_quasi_optimality(std::uint64_t seed, long cases) {
    SuiteReport rep = named("quasi-optimality");
    Rng rng(seed);
    double worst = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const int d = static_cast<int>(uniform_int(rng, 2, 4));
            const Dims dims = random_dims(rng, d, 2, 6);
            const auto tree = make_tree("balanced", d);
            DenseTensor t = ht_to_dense(random_ht(rng, tree, dims, uniform(rng, 0.3, 1.0), 6));
            const MatrixXd noise = gaussian(rng, t.size(), 1) * (1e-3 * t.norm() / std::sqrt(double(t.size())));
            t = dense_linear_combine(1.0, t, 1.0, DenseTensor(dims, noise.col(0)));

            std::vector<Index> caps(static_cast<std::size_t>(tree->node_count()), 1);
            for (auto& cap : caps) cap = uniform_int(rng, 1, 4);
            const auto ctrl = TruncationControl::fixed_rank(caps);
            const Truncated full = ht_from_dense(t, tree, TruncationControl::tolerance(0.0));
            const std::pair<const char*, Truncated> paths[] = {{"from_dense", ht_from_dense(t, tree, ctrl)},
                                                               {"truncate", ht_truncate(full.tensor, ctrl)}};
            const double factor = TruncationControl::quasi_optimality_factor(d);
            for (const auto& [label, tr] : paths) {
                // Any tensor with these node ranks is at least the matricization tail away.
                double lower = 0.0;
                for (int node = 1; node < tree->node_count(); ++node) {
                    const VectorXd s = Eigen::JacobiSVD<MatrixXd>(matricize(t, tree->node(node).modes)).singularValues();
                    const Index r = std::min<Index>(tr.tensor.rank(node), s.size());
                    lower = std::max(lower, s.tail(s.size() - r).norm());
                }
                const double err = dense_distance(t, ht_to_dense(tr.tensor));
                if (lower > 0.0) worst = std::max(worst, err / lower);
                if (!(err <= factor * lower + kRoundoff * t.norm())) {
                    std::ostringstream why;
                    why << label << " error " << err << " > sqrt(2d-3) * lower bound " << factor * lower;
                    rep.fail(case_label(c) + why.str());
                }
            }
        });
    }
    rep.metric("max_error_over_lower_bound", worst);
    return rep;
}

SuiteReport suite_projector(std::uint64_t seed, long cases) {
    SuiteReport rep = named("projector");
    Rng rng(seed);
    constexpr int kCompetitors = 1000;
    double worst_idem = 0.0, worst_adj = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 4, 10), n2 = uniform_int(rng, 4, 10);
            const Index r = uniform_int(rng, 1, std::min(n1, n2) - 1);
            const SVDTriple f = random_separated(rng, n1, n2, r);
            const MatrixXd v = gaussian(rng, n1, n2), w = gaussian(rng, n1, n2);
            const MatrixXd pv = tangent_project(f, v), pw = tangent_project(f, w);
            const double scale = v.norm() * w.norm();
            const double idem = (tangent_project(f, pv) - pv).norm() / v.norm();
            const double adj = std::abs((pv.array() * w.array()).sum() - (v.array() * pw.array()).sum()) / scale;
            const double pyth = std::abs(v.squaredNorm() - pv.squaredNorm() - (v - pv).squaredNorm()) / v.squaredNorm();
            worst_idem = std::max(worst_idem, idem);
            worst_adj = std::max(worst_adj, adj);
            std::ostringstream why;
            if (!(idem <= 1e-12)) why << "P not idempotent (" << idem << "); ";
            if (!(adj <= 1e-12)) why << "P not self-adjoint (" << adj << "); ";
            if (!(pyth <= 1e-12)) why << "Pythagoras violated (" << pyth << "); ";

            // Pv is the closest tangent vector to v.
            const double dist = (v - pv).norm();
            for (int k = 0; k < kCompetitors; ++k) {
                const double s = k % 2 ? 1.0 : 1e-3;
                MatrixXd x = f.Q * gaussian(rng, r, n2) + gaussian(rng, n1, r) * f.V.transpose();
                x = pv + s * tangent_project(f, x);
                if (!(dist <= (v - x).norm() * (1 + 1e-12))) {
                    why << "tangent competitor " << k << " beats Pv; ";
                    break;
                }
            }
            // No rank-r matrix beats the truncated SVD.
            const MatrixXd m = f.to_matrix() + 0.3 * gaussian(rng, n1, n2);
            const BestTruncation best = best_truncate_matrix(m, r);
            for (int k = 0; k < kCompetitors; ++k) {
                MatrixXd a = best.factors.Q * best.factors.sigma.asDiagonal(), b = best.factors.V;
                const double s = k % 2 ? 1.0 : 1e-3;
                a += s * gaussian(rng, n1, r);
                b += s * gaussian(rng, n2, r);
                if (!(best.error <= (m - a * b.transpose()).norm() * (1 + 1e-12))) {
                    why << "rank-" << r << " competitor " << k << " beats the truncated SVD; ";
                    break;
                }
            }
            if (!why.str().empty()) rep.fail(case_label(c) + why.str());
        });
    }
    rep.metric("max_idempotence_defect", worst_idem);
    rep.metric("max_adjoint_defect", worst_adj);
    return rep;
}

SuiteReport suite_jacobian(std::uint64_t seed, long cases) {
    SuiteReport rep = named("jacobian");
    Rng rng(seed);
    const std::vector<double> hs = {1e-3, 1e-4, 1e-5, 1e-6};
    double min_slope = 1e300;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 4, 10), n2 = uniform_int(rng, 4, 10);
            const Index r = uniform_int(rng, 1, std::min(n1, n2) - 1);
            const SVDTriple f = random_separated(rng, n1, n2, r);
            const MatrixXd v = unit_gaussian(rng, n1, n2);
            const MatrixXd pv = tangent_project(f, v);
            // The difference quotient is formed in extended precision; in double its
            // cancellation error eps * ||g|| / h is comparable to the O(h) term at h = 1e-6.
            using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
            const MatrixXld g = f.Q.cast<long double>() * f.sigma.cast<long double>().asDiagonal() *
                                f.V.cast<long double>().transpose();
            std::vector<double> errs;
            for (double h : hs) {
                const long double hl = h;
                const MatrixXld perturbed = g + hl * v.cast<long double>();
                const Eigen::JacobiSVD<MatrixXld> svd(perturbed, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const MatrixXld best = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                                       svd.matrixV().leftCols(r).transpose();
                const MatrixXld fd = (best - g) / hl;
                errs.push_back(static_cast<double>((fd - pv.cast<long double>()).norm()));
            }
            const double s = fit_slope(hs, errs);
            min_slope = std::min(min_slope, s);
            if (!(s >= 0.9)) {
                std::ostringstream why;
                why << "finite-difference error slope " << s << " < 0.9 (" << n1 << "x" << n2 << " rank " << r << ", errors";
                for (double e : errs) why << " " << e;
                why << ")";
                rep.fail(case_label(c) + why.str());
            }
        });
    }
    rep.metric("min_slope", min_slope);
    return rep;
}

SuiteReport suite_consistency(std::uint64_t seed, long cases) {
    SuiteReport rep = named("consistency");
    Rng rng(seed);
    std::vector<double> dts;
    for (int e = 5; e <= 9; ++e) dts.push_back(std::ldexp(1.0, -e));
    double lo = 1e300, hi = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 4, 10), n2 = uniform_int(rng, 4, 10);
            const Index r = uniform_int(rng, 1, std::min(n1, n2) - 1);
            const SVDTriple f = random_separated(rng, n1, n2, r);
            const MatrixXd v = unit_gaussian(rng, n1, n2);
            std::ostringstream why;
            double prev = consistency_gap(f, v, dts[0]);
            for (std::size_t i = 1; i < dts.size(); ++i) {
                const double gap = consistency_gap(f, v, dts[i]);
                const double ratio = gap / prev;
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
                if (!(ratio >= 0.15 && ratio <= 0.35)) why << "ratio " << ratio << " at dt " << dts[i] << "; ";
                prev = gap;
            }
            if (!why.str().empty()) rep.fail(case_label(c) + why.str());
        });
    }
    rep.metric("min_ratio", lo);
    rep.metric("max_ratio", hi);
    return rep;
}

SuiteReport suite_prop5_equivalence(std::uint64_t seed, long cases) {
    SuiteReport rep = named("prop5-equivalence");
    Rng rng(seed);
    const std::vector<double> dts = default_equivalence_sweep();
    long unbounded = 0, unexpected = 0, n_disagree = 0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 4, 10), n2 = uniform_int(rng, 4, 10);
            const Index r = uniform_int(rng, 1, std::min(n1, n2) - 1);
            const SVDTriple f = random_separated(rng, n1, n2, r);
            const MatrixXd vt = tangent_project(f, gaussian(rng, n1, n2));
            MatrixXd w = gaussian(rng, n1, n2);
            w -= tangent_project(f, w);
            w /= w.norm();
            const double kappa = uniform(rng, 0.5, 2.0);
            // classes: normal part ~ dt^0, dt^1, dt^2, or purely tangent
            const int cls = static_cast<int>(c % 4);
            const auto v = [&](double dt) -> MatrixXd {
                if (cls == 3) return vt;
                return vt + kappa * std::pow(dt, cls) * w;
            };
            const EquivalenceReport eq = equivalence_check(f, v, dts);
            const bool expect_bounded = cls != 0;
            if (!eq.k_bounded) ++unbounded;
            if (eq.k_bounded != expect_bounded) ++unexpected;
            if (eq.n_bounded != eq.m_bounded) ++n_disagree;
            if (eq.k_bounded != eq.m_bounded) {
                std::ostringstream why;
                why << "class " << cls << ": K " << (eq.k_bounded ? "bounded" : "unbounded") << ", M "
                    << (eq.m_bounded ? "bounded" : "unbounded");
                rep.fail(case_label(c) + why.str());
            }
        });
    }
    rep.metric("unbounded_cases", static_cast<double>(unbounded));
    rep.metric("verdicts_off_expected_class", static_cast<double>(unexpected));
    rep.metric("ht_svd_verdict_disagreements", static_cast<double>(n_disagree));
    return rep;
}

SuiteReport suite_dobo(std::uint64_t seed, long cases) {
    SuiteReport rep = named("dobo");
    Rng rng(seed);
    constexpr double kT = 0.1, kDt = 1e-3;
    const long steps = std::lround(kT / kDt);
    double worst = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 5, 12), n2 = uniform_int(rng, 5, 12);
            const Index r = uniform_int(rng, 1, std::min<Index>(4, std::min(n1, n2) - 1));
            const MatrixXd p = gaussian(rng, n1, n1) / std::sqrt(double(n1));
            const MatrixXd q = gaussian(rng, n2, n2) / std::sqrt(double(n2));
            const auto rhs = [&](const MatrixXd& x) -> MatrixXd { return p * x + x * q; };

            SVDTriple s = random_separated(rng, n1, n2, r);
            DOState o{s.Q, MatrixXd(s.sigma.asDiagonal()), s.V};
            const auto svd_rates = [&](const SVDTriple& x) { return svd_rhs(x, rhs(x.to_matrix())); };
            const auto do_rates = [&](const DOState& x) { return do_rhs(x, rhs(x.to_matrix())); };
            const auto svd_add = [](const SVDTriple& x, const SVDRates& k, double a) {
                return SVDTriple{x.Q + a * k.dQ, x.sigma + a * k.dsigma, x.V + a * k.dV};
            };
            const auto do_add = [](const DOState& x, const DORates& k, double a) {
                return DOState{x.W + a * k.dW, x.A + a * k.dA, x.B + a * k.dB};
            };
            double dev = 0.0;
            for (long k = 0; k < steps; ++k) {
                const SVDRates a1 = svd_rates(s), a2 = svd_rates(svd_add(s, a1, kDt / 2)),
                               a3 = svd_rates(svd_add(s, a2, kDt / 2)), a4 = svd_rates(svd_add(s, a3, kDt));
                s = SVDTriple{s.Q + kDt / 6 * (a1.dQ + 2 * a2.dQ + 2 * a3.dQ + a4.dQ),
                              s.sigma + kDt / 6 * (a1.dsigma + 2 * a2.dsigma + 2 * a3.dsigma + a4.dsigma),
                              s.V + kDt / 6 * (a1.dV + 2 * a2.dV + 2 * a3.dV + a4.dV)};
                const DORates b1 = do_rates(o), b2 = do_rates(do_add(o, b1, kDt / 2)),
                              b3 = do_rates(do_add(o, b2, kDt / 2)), b4 = do_rates(do_add(o, b3, kDt));
                o = DOState{o.W + kDt / 6 * (b1.dW + 2 * b2.dW + 2 * b3.dW + b4.dW),
                            o.A + kDt / 6 * (b1.dA + 2 * b2.dA + 2 * b3.dA + b4.dA),
                            o.B + kDt / 6 * (b1.dB + 2 * b2.dB + 2 * b3.dB + b4.dB)};
                dev = std::max(dev, (o.to_matrix() - s.to_matrix()).norm());
            }
            worst = std::max(worst, dev);
            if (!(dev <= 1e-6)) {
                std::ostringstream why;
                why << "max ||W A B^T - Q S V^T|| = " << dev;
                rep.fail(case_label(c) + why.str());
            }
        });
    }
    rep.metric("max_deviation", worst);
    return rep;
}

SuiteReport suite_perturbation(std::uint64_t seed, long cases) {
    SuiteReport rep = named("perturbation");
    Rng rng(seed);
    std::vector<double> dts;
    for (int k = 0; k <= 4; ++k) dts.push_back(1e-2 * std::ldexp(1.0, -k));
    double lo = 1e300, hi = 0.0;
    for (long c = 0; c < cases; ++c) {
        ++rep.cases;
        guarded(rep, c, [&] {
            const Index n1 = uniform_int(rng, 4, 10), n2 = uniform_int(rng, 4, 10);
            const Index r = uniform_int(rng, 1, std::min(n1, n2) - 1);
            const SVDTriple f = random_separated(rng, n1, n2, r);
            const MatrixXd n_val = unit_gaussian(rng, n1, n2);
            const auto defect = [&](double dt) {
                const MatrixXd exact = best_truncate_matrix(f.to_matrix() + dt * n_val, r).approx;
                return (svd_perturb_step(f, n_val, dt).to_matrix() - exact).norm();
            };
            std::ostringstream why;
            double prev = defect(dts[0]);
            for (std::size_t i = 1; i < dts.size(); ++i) {
                const double cur = defect(dts[i]);
                const double ratio = cur / prev;
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
                if (!(ratio >= 0.2 && ratio <= 0.3)) why << "ratio " << ratio << " at dt " << dts[i] << "; ";
                prev = cur;
            }
            if (!why.str().empty()) rep.fail(case_label(c) + why.str());
        });
    }
    rep.metric("min_ratio", lo);
    rep.metric("max_ratio", hi);
    return rep;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"truncation",  "quasi-optimality",  "projector", "jacobian",
                                                   "consistency", "prop5-equivalence", "dobo",      "perturbation"};
    return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed, long cases) {
    if (cases < 0) throw InputError("case count must be non-negative");
    const auto pick = [&](long dflt) { return cases > 0 ? cases : dflt; };
    if (name == "truncation") return suite_truncation(seed, pick(500));
    if (name == "quasi-optimality") return suite_quasi_optimality(seed, pick(200));
    if (name == "projector") return suite_projector(seed, pick(20));
    if (name == "jacobian") return suite_jacobian(seed, pick(100));
    if (name == "consistency") return suite_consistency(seed, pick(100));
    if (name == "prop5-equivalence") return suite_prop5_equivalence(seed, pick(100));
    if (name == "dobo") return suite_dobo(seed, pick(20));
    if (name == "perturbation") return suite_perturbation(seed, pick(20));
    throw InputError("unknown property suite '" + name + "'");
}

}  // namespace htstep
