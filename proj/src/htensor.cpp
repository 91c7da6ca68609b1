#include "htstep/htensor.hpp"

#include "htstep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace htstep {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_budget(Index rows, Index cols, const char* what) {
    const double count = static_cast<double>(rows) * static_cast<double>(cols);
    if (count > static_cast<double>(dense_element_budget()))
        throw BudgetError(std::string(what) + ": intermediate of " + std::to_string(rows) + " x " +
                          std::to_string(cols) + " exceeds dense element budget");
}

void require_same_format(const HTensor& x, const HTensor& y, const char* what) {
    if (x.dims() != y.dims()) throw InputError(std::string(what) + ": dims differ");
    if (x.tree_ptr() != y.tree_ptr() && !(x.tree() == y.tree()))
        throw InputError(std::string(what) + ": dimension trees differ");
}

// Frame of node t with modes carrying a weight already contracted away.
MatrixXd contracted_frame(const HTensor& h, int t, const std::vector<std::optional<VectorXd>>& w) {
    const auto& node = h.tree().node(t);
    const MatrixXd& f = h.factor(t);
    if (node.is_leaf()) {
        const auto& wk = w[static_cast<std::size_t>(node.modes.front())];
        if (wk) return wk->transpose() * f;
        return f;
    }
    const MatrixXd fl = contracted_frame(h, node.left, w);
    const MatrixXd fr = contracted_frame(h, node.right, w);
    const Index rl = fl.cols(), rr = fr.cols(), rt = f.cols();
    require_budget(fl.rows() * fr.rows(), rt, "ht_contract");
    const MatrixXd x = fl * Eigen::Map<const MatrixXd>(f.data(), rl, rr * rt);
    MatrixXd out(fl.rows() * fr.rows(), rt);
    const MatrixXd frt = fr.transpose();
    for (Index j = 0; j < rt; ++j) {
        Eigen::Map<MatrixXd> slice(out.col(j).data(), fl.rows(), fr.rows());
        slice.noalias() = x.middleCols(j * rr, rr) * frt;
    }
    return out;
}

// Keeps the fewest leading singular values (at least one) whose discarded tail has
// squared norm <= budget_sq.
Index keep_for_tail(const VectorXd& s, double budget_sq) {
    Index k = s.size();
    double tail = 0.0;
    while (k > 1) {
        const double next = tail + s[k - 1] * s[k - 1];
        if (next > budget_sq) break;
        tail = next;
        --k;
    }
    return std::max<Index>(k, 1);
}

double tail_sq(const VectorXd& s, Index k) {
    double acc = 0.0;
    for (Index i = s.size() - 1; i >= k; --i) acc += s[i] * s[i];
    return acc;
}

// One group per distinct matricization: the two root children share theirs.
struct TruncationGroup {
    std::vector<int> nodes;
    VectorXd sigma;
    Index keep = 1;
};

std::vector<TruncationGroup> make_groups(const DimensionTree& tree) {
    std::vector<TruncationGroup> groups;
    const auto& root = tree.node(0);
    groups.push_back({{root.left, root.right}, {}, 1});
    for (int t = 1; t < tree.node_count(); ++t)
        if (t != root.left && t != root.right) groups.push_back({{t}, {}, 1});
    return groups;
}

// Picks ranks per group and returns the error estimate.
double choose_ranks(std::vector<TruncationGroup>& groups, const TruncationControl& ctrl) {
    if (ctrl.kind() == TruncationControl::Kind::FixedRank) {
        double err_sq = 0.0;
        for (auto& g : groups) {
            Index cap = std::numeric_limits<Index>::max();
            for (int t : g.nodes) cap = std::min(cap, ctrl.cap(t));
            g.keep = std::max<Index>(1, std::min<Index>(cap, g.sigma.size()));
            err_sq += tail_sq(g.sigma, g.keep);
        }
        return std::sqrt(err_sq);
    }

    const double eps = ctrl.eps();
    const double budget_sq = eps * eps / static_cast<double>(groups.size());
    for (auto& g : groups) g.keep = keep_for_tail(g.sigma, budget_sq);

    // The per-group budgets sum to eps^2 only in exact arithmetic; restore singular
    // values until the rounded estimate honours eps.
    for (;;) {
        double err_sq = 0.0;
        for (const auto& g : groups) err_sq += tail_sq(g.sigma, g.keep);
        const double err = std::sqrt(err_sq);
        if (err <= eps) return err;
        TruncationGroup* best = nullptr;
        for (auto& g : groups)
            if (g.keep < g.sigma.size() && (!best || g.sigma[g.keep] > best->sigma[best->keep])) best = &g;
        if (!best) return err;
        ++best->keep;
    }
}

Eigen::BDCSVD<MatrixXd> thin_svd(const MatrixXd& m, bool need_v) {
    unsigned opts = Eigen::ComputeThinU;
    if (need_v) opts |= Eigen::ComputeThinV;
    Eigen::BDCSVD<MatrixXd> svd(m, opts);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD failed to converge");
    return svd;
}

// Left singular bases and singular values at every non-root node of an
// orthogonalized HT tensor.
struct NodeSpectra {
    std::vector<MatrixXd> basis;
    std::vector<VectorXd> sigma;
};

NodeSpectra node_spectra(const HTensor& o) {
    const auto& tree = o.tree();
    const int nn = tree.node_count();
    NodeSpectra out{std::vector<MatrixXd>(static_cast<std::size_t>(nn)),
                    std::vector<VectorXd>(static_cast<std::size_t>(nn))};
    // reduced[t] = S_t * Sigma_t, an r_t x m factor of the reduced Gramian at t.
    std::vector<MatrixXd> reduced(static_cast<std::size_t>(nn));

    const auto& root = tree.node(0);
    {
        const Index rl = o.rank(root.left), rr = o.rank(root.right);
        const MatrixXd x = transfer_slice(o.factor(0), rl, rr, 0);
        const auto svd = thin_svd(x, true);
        for (int c : {root.left, root.right}) {
            const auto cs = static_cast<std::size_t>(c);
            out.basis[cs] = (c == root.left) ? svd.matrixU() : svd.matrixV();
            out.sigma[cs] = svd.singularValues();
            reduced[cs] = out.basis[cs] * svd.singularValues().asDiagonal();
        }
    }
    for (const auto& layer : tree.layers()) {
        for (int t : layer) {
            const auto& node = tree.node(t);
            if (t == 0 || node.is_leaf()) continue;
            const Index rl = o.rank(node.left), rr = o.rank(node.right);
            const MatrixXd c = o.factor(t) * reduced[static_cast<std::size_t>(t)];
            const Index m = c.cols();
            const MatrixXd kl = Eigen::Map<const MatrixXd>(c.data(), rl, rr * m);
            MatrixXd kr(rr, rl * m);
            for (Index j = 0; j < m; ++j) kr.middleCols(j * rl, rl) = transfer_slice(c, rl, rr, j).transpose();
            for (auto [child, k] : {std::pair<int, const MatrixXd*>{node.left, &kl}, {node.right, &kr}}) {
                const auto cs = static_cast<std::size_t>(child);
                const auto svd = thin_svd(*k, false);
                out.basis[cs] = svd.matrixU();
                out.sigma[cs] = svd.singularValues();
                reduced[cs] = out.basis[cs] * svd.singularValues().asDiagonal();
            }
        }
    }
    return out;
}

}  // namespace

HTensor::HTensor(TreePtr tree, Dims dims, std::vector<MatrixXd> factors)
    : tree_(std::move(tree)), dims_(std::move(dims)), factors_(std::move(factors)) {
    validate();
}

HTensor HTensor::zeros(TreePtr tree, Dims dims) {
    if (!tree) throw InputError("HTensor requires a dimension tree");
    std::vector<MatrixXd> f(static_cast<std::size_t>(tree->node_count()));
    for (int t = 0; t < tree->node_count(); ++t) {
        const auto& node = tree->node(t);
        if (node.is_leaf()) {
            const Index n = dims.at(static_cast<std::size_t>(node.modes.front()));
            f[static_cast<std::size_t>(t)] = MatrixXd::Zero(n, 1);
            f[static_cast<std::size_t>(t)](0, 0) = 1.0;
        } else {
            f[static_cast<std::size_t>(t)] = MatrixXd::Constant(1, 1, t == 0 ? 0.0 : 1.0);
        }
    }
    return HTensor(std::move(tree), std::move(dims), std::move(f));
}

HTensor HTensor::rank_one(TreePtr tree, const std::vector<VectorXd>& vectors) {
    if (!tree) throw InputError("HTensor requires a dimension tree");
    if (static_cast<int>(vectors.size()) != tree->order())
        throw InputError("rank_one: need one vector per mode");
    Dims dims;
    for (const auto& v : vectors) dims.push_back(v.size());
    std::vector<MatrixXd> f(static_cast<std::size_t>(tree->node_count()));
    for (int t = 0; t < tree->node_count(); ++t) {
        const auto& node = tree->node(t);
        f[static_cast<std::size_t>(t)] =
            node.is_leaf() ? MatrixXd(vectors[static_cast<std::size_t>(node.modes.front())]) : MatrixXd::Ones(1, 1);
    }
    return HTensor(std::move(tree), std::move(dims), std::move(f));
}

std::vector<Index> HTensor::ranks() const {
    std::vector<Index> r;
    for (const auto& f : factors_) r.push_back(f.cols());
    return r;
}

Index HTensor::max_rank() const {
    Index m = 0;
    for (std::size_t t = 1; t < factors_.size(); ++t) m = std::max(m, factors_[t].cols());
    return m;
}

Index HTensor::parameter_count() const {
    Index n = 0;
    for (const auto& f : factors_) n += f.size();
    return n;
}

void HTensor::validate() const {
    if (!tree_) throw InputError("HTensor requires a dimension tree");
    if (static_cast<int>(dims_.size()) != tree_->order()) throw InputError("HTensor dims do not match tree order");
    if (static_cast<int>(factors_.size()) != tree_->node_count())
        throw InputError("HTensor needs one factor per tree node");
    for (Index n : dims_)
        if (n < 1) throw InputError("HTensor extents must be positive");
    for (int t = 0; t < tree_->node_count(); ++t) {
        const auto& node = tree_->node(t);
        const MatrixXd& f = factor(t);
        if (f.cols() < 1) throw InputError("node rank must be at least 1");
        if (node.is_leaf()) {
            if (f.rows() != dims_[static_cast<std::size_t>(node.modes.front())])
                throw InputError("leaf frame rows must equal the mode extent");
        } else if (f.rows() != rank(node.left) * rank(node.right)) {
            throw InputError("transfer tensor rows must equal the product of child ranks");
        }
    }
    if (rank(0) != 1) throw InputError("root rank must be 1");
}

HTensor HTensor::scaled(double alpha) const {
    HTensor out = *this;
    out.factors_[0] *= alpha;
    return out;
}

TruncationControl TruncationControl::tolerance(double eps) {
    if (!(eps >= 0.0)) throw InputError("truncation tolerance must be >= 0");
    TruncationControl c;
    c.kind_ = Kind::Tolerance;
    c.eps_ = eps;
    return c;
}

TruncationControl TruncationControl::fixed_rank(Index cap) {
    if (cap < 1) throw InputError("rank cap must be >= 1");
    TruncationControl c;
    c.kind_ = Kind::FixedRank;
    c.uniform_cap_ = cap;
    return c;
}

TruncationControl TruncationControl::fixed_rank(std::vector<Index> caps) {
    for (std::size_t t = 1; t < caps.size(); ++t)
        if (caps[t] < 1) throw InputError("rank caps must be >= 1");
    TruncationControl c;
    c.kind_ = Kind::FixedRank;
    c.caps_ = std::move(caps);
    return c;
}

Index TruncationControl::cap(int node) const {
    if (caps_.empty()) return uniform_cap_;
    if (node < 0 || static_cast<std::size_t>(node) >= caps_.size())
        throw InputError("no rank cap for node " + std::to_string(node));
    return caps_[static_cast<std::size_t>(node)];
}

double TruncationControl::quasi_optimality_factor(int d) {
    if (d < 2) throw InputError("quasi-optimality factor needs d >= 2");
    return std::sqrt(2.0 * d - 3.0);
}

DenseTensor ht_to_dense(const HTensor& h) {
    checked_element_count(h.dims());
    return ht_contract_modes(h, std::vector<std::optional<VectorXd>>(h.dims().size()));
}

DenseTensor ht_contract_modes(const HTensor& h, const std::vector<std::optional<VectorXd>>& weights) {
    if (weights.size() != h.dims().size()) throw InputError("ht_contract_modes: need one entry per mode");
    Dims rest;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!weights[k]) {
            rest.push_back(h.dims()[k]);
        } else if (weights[k]->size() != h.dims()[k]) {
            throw InputError("ht_contract_modes: weight length does not match mode extent");
        }
    }
    if (rest.empty()) throw InputError("ht_contract_modes: at least one mode must remain");
    checked_element_count(rest);
    MatrixXd f = contracted_frame(h, 0, weights);
    return DenseTensor(std::move(rest), VectorXd(Eigen::Map<VectorXd>(f.data(), f.size())));
}

double ht_contract_all(const HTensor& h, const std::vector<VectorXd>& weights) {
    if (weights.size() != h.dims().size()) throw InputError("ht_contract_all: need one vector per mode");
    std::vector<std::optional<VectorXd>> w;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].size() != h.dims()[k])
            throw InputError("ht_contract_all: weight length does not match mode extent");
        w.emplace_back(weights[k]);
    }
    return contracted_frame(h, 0, w)(0, 0);
}

double ht_inner(const HTensor& x, const HTensor& y) {
    require_same_format(x, y, "ht_inner");
    const auto& tree = x.tree();
    std::vector<MatrixXd> gram(static_cast<std::size_t>(tree.node_count()));
    for (int t = tree.node_count() - 1; t >= 0; --t) {
        const auto& node = tree.node(t);
        const MatrixXd& bx = x.factor(t);
        const MatrixXd& by = y.factor(t);
        if (node.is_leaf()) {
            gram[static_cast<std::size_t>(t)] = bx.transpose() * by;
            continue;
        }
        const MatrixXd& gl = gram[static_cast<std::size_t>(node.left)];
        const MatrixXd& gr = gram[static_cast<std::size_t>(node.right)];
        const Index yl = y.rank(node.left), yr = y.rank(node.right);
        const Index xl = x.rank(node.left), xr = x.rank(node.right);
        MatrixXd tmp(xl * xr, by.cols());
        const MatrixXd grt = gr.transpose();
        for (Index k = 0; k < by.cols(); ++k) {
            Eigen::Map<MatrixXd> slice(tmp.col(k).data(), xl, xr);
            slice.noalias() = gl * transfer_slice(by, yl, yr, k) * grt;
        }
        gram[static_cast<std::size_t>(t)] = bx.transpose() * tmp;
    }
    return gram[0](0, 0);
}

double ht_norm(const HTensor& h) {
    // Orthogonal frames make the norm readable from the root transfer tensor.
    return ht_orthogonalize(h).factor(0).norm();
}

HTensor ht_linear_combine(double alpha, const HTensor& x, double beta, const HTensor& y) {
    require_same_format(x, y, "ht_linear_combine");
    if (beta == 0.0) return x.scaled(alpha);
    if (alpha == 0.0) return y.scaled(beta);
    const auto& tree = x.tree();
    std::vector<MatrixXd> f(static_cast<std::size_t>(tree.node_count()));
    for (int t = 0; t < tree.node_count(); ++t) {
        const auto& node = tree.node(t);
        const MatrixXd& fx = x.factor(t);
        const MatrixXd& fy = y.factor(t);
        auto& out = f[static_cast<std::size_t>(t)];
        if (node.is_leaf()) {
            out.resize(fx.rows(), fx.cols() + fy.cols());
            out << fx, fy;
            continue;
        }
        const Index xl = x.rank(node.left), xr = x.rank(node.right);
        const Index yl = y.rank(node.left), yr = y.rank(node.right);
        const Index nl = xl + yl, nr = xr + yr;
        if (t == 0) {
            out = MatrixXd::Zero(nl * nr, 1);
            Eigen::Map<MatrixXd> s(out.data(), nl, nr);
            s.topLeftCorner(xl, xr) = alpha * transfer_slice(fx, xl, xr, 0);
            s.bottomRightCorner(yl, yr) = beta * transfer_slice(fy, yl, yr, 0);
            continue;
        }
        out = MatrixXd::Zero(nl * nr, fx.cols() + fy.cols());
        for (Index j = 0; j < fx.cols(); ++j) {
            Eigen::Map<MatrixXd> s(out.col(j).data(), nl, nr);
            s.topLeftCorner(xl, xr) = transfer_slice(fx, xl, xr, j);
        }
        for (Index j = 0; j < fy.cols(); ++j) {
            Eigen::Map<MatrixXd> s(out.col(fx.cols() + j).data(), nl, nr);
            s.bottomRightCorner(yl, yr) = transfer_slice(fy, yl, yr, j);
        }
    }
    return HTensor(x.tree_ptr(), x.dims(), std::move(f));
}

HTensor ht_orthogonalize(const HTensor& h) {
    const auto& tree = h.tree();
    const int nn = tree.node_count();
    std::vector<MatrixXd> f(static_cast<std::size_t>(nn));
    std::vector<MatrixXd> r(static_cast<std::size_t>(nn));
    for (int t = nn - 1; t >= 0; --t) {
        const auto& node = tree.node(t);
        const auto ts = static_cast<std::size_t>(t);
        MatrixXd m;
        if (node.is_leaf()) {
            m = h.factor(t);
        } else {
            const MatrixXd& rl = r[static_cast<std::size_t>(node.left)];
            const MatrixXd& rr = r[static_cast<std::size_t>(node.right)];
            const MatrixXd& b = h.factor(t);
            const Index ol = h.rank(node.left), orr = h.rank(node.right);
            m.resize(rl.rows() * rr.rows(), b.cols());
            const MatrixXd rrt = rr.transpose();
            for (Index j = 0; j < b.cols(); ++j) {
                Eigen::Map<MatrixXd> s(m.col(j).data(), rl.rows(), rr.rows());
                s.noalias() = rl * transfer_slice(b, ol, orr, j) * rrt;
            }
        }
        if (t == 0) {
            f[ts] = std::move(m);
            break;
        }
        const Index k = std::min(m.rows(), m.cols());
        Eigen::HouseholderQR<MatrixXd> qr(m);
        f[ts] = qr.householderQ() * MatrixXd::Identity(m.rows(), k);
        r[ts] = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    }
    return HTensor(h.tree_ptr(), h.dims(), std::move(f));
}

std::vector<VectorXd> ht_node_singular_values(const HTensor& h) {
    return node_spectra(ht_orthogonalize(h)).sigma;
}

Truncated ht_truncate(const HTensor& h, const TruncationControl& ctrl) {
    if (ctrl.kind() == TruncationControl::Kind::Tolerance && ctrl.eps() == 0.0) return {h, 0.0};
    const auto& tree = h.tree();
    const HTensor o = ht_orthogonalize(h);
    const NodeSpectra spectra = node_spectra(o);

    auto groups = make_groups(tree);
    for (auto& g : groups) g.sigma = spectra.sigma[static_cast<std::size_t>(g.nodes.front())];
    const double err = choose_ranks(groups, ctrl);

    std::vector<MatrixXd> basis(static_cast<std::size_t>(tree.node_count()));
    for (const auto& g : groups)
        for (int t : g.nodes)
            basis[static_cast<std::size_t>(t)] = spectra.basis[static_cast<std::size_t>(t)].leftCols(g.keep);

    std::vector<MatrixXd> f(static_cast<std::size_t>(tree.node_count()));
    for (int t = 0; t < tree.node_count(); ++t) {
        const auto& node = tree.node(t);
        const auto ts = static_cast<std::size_t>(t);
        if (node.is_leaf()) {
            f[ts] = o.factor(t) * basis[ts];
            continue;
        }
        const MatrixXd& sl = basis[static_cast<std::size_t>(node.left)];
        const MatrixXd& sr = basis[static_cast<std::size_t>(node.right)];
        const Index rl = o.rank(node.left), rr = o.rank(node.right);
        const MatrixXd c = (t == 0) ? o.factor(t) : MatrixXd(o.factor(t) * basis[ts]);
        f[ts].resize(sl.cols() * sr.cols(), c.cols());
        for (Index j = 0; j < c.cols(); ++j) {
            Eigen::Map<MatrixXd> s(f[ts].col(j).data(), sl.cols(), sr.cols());
            s.noalias() = sl.transpose() * transfer_slice(c, rl, rr, j) * sr;
        }
    }
    return {HTensor(h.tree_ptr(), h.dims(), std::move(f)), err};
}

Truncated ht_from_dense(const DenseTensor& t, TreePtr tree, const TruncationControl& ctrl) {
    if (!tree) throw InputError("ht_from_dense requires a dimension tree");
    if (tree->order() != t.order()) throw InputError("ht_from_dense: tree order does not match tensor order");
    const int nn = tree->node_count();
    const auto& root = tree->node(0);

    std::vector<MatrixXd> full_basis(static_cast<std::size_t>(nn));
    std::vector<VectorXd> sigma(static_cast<std::size_t>(nn));
    for (int s = 1; s < nn; ++s) {
        if (s == root.right) continue;
        const bool joint = (s == root.left);
        const auto svd = thin_svd(matricize(t, tree->node(s).modes), joint);
        full_basis[static_cast<std::size_t>(s)] = svd.matrixU();
        sigma[static_cast<std::size_t>(s)] = svd.singularValues();
        if (joint) {
            full_basis[static_cast<std::size_t>(root.right)] = svd.matrixV();
            sigma[static_cast<std::size_t>(root.right)] = svd.singularValues();
        }
    }

    auto groups = make_groups(*tree);
    for (auto& g : groups) g.sigma = sigma[static_cast<std::size_t>(g.nodes.front())];
    const double err = choose_ranks(groups, ctrl);

    std::vector<MatrixXd> frame(static_cast<std::size_t>(nn));
    for (const auto& g : groups)
        for (int s : g.nodes) frame[static_cast<std::size_t>(s)] = full_basis[static_cast<std::size_t>(s)].leftCols(g.keep);

    auto slice_count = [&](const ModeSet& modes) {
        Index n = 1;
        for (int k : modes.modes()) n *= t.dims()[static_cast<std::size_t>(k)];
        return n;
    };

    std::vector<MatrixXd> f(static_cast<std::size_t>(nn));
    for (int s = 0; s < nn; ++s) {
        const auto& node = tree->node(s);
        const auto ss = static_cast<std::size_t>(s);
        if (node.is_leaf()) {
            f[ss] = frame[ss];
            continue;
        }
        const MatrixXd& ul = frame[static_cast<std::size_t>(node.left)];
        const MatrixXd& ur = frame[static_cast<std::size_t>(node.right)];
        const Index nl = slice_count(tree->node(node.left).modes);
        const Index nr = slice_count(tree->node(node.right).modes);
        const MatrixXd cols = (s == 0) ? MatrixXd(Eigen::Map<const MatrixXd>(t.data().data(), t.size(), 1)) : frame[ss];
        f[ss].resize(ul.cols() * ur.cols(), cols.cols());
        for (Index j = 0; j < cols.cols(); ++j) {
            Eigen::Map<const MatrixXd> y(cols.col(j).data(), nl, nr);
            Eigen::Map<MatrixXd> b(f[ss].col(j).data(), ul.cols(), ur.cols());
            b.noalias() = ul.transpose() * y * ur;
        }
    }
    return {HTensor(std::move(tree), t.dims(), std::move(f)), err};
}

}  // namespace htstep
