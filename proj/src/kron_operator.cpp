#include "htstep/kron_operator.hpp"

#include "htstep/errors.hpp"

#include <string>

namespace htstep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ModeFactor ModeFactor::identity(Index n) {
    ModeFactor f;
    f.kind_ = Kind::Identity;
    f.n_ = n;
    return f;
}

ModeFactor ModeFactor::diagonal(VectorXd d) {
    ModeFactor f;
    f.kind_ = Kind::Diagonal;
    f.n_ = d.size();
    f.diag_ = std::move(d);
    return f;
}

ModeFactor ModeFactor::dense(MatrixXd a) {
    if (a.rows() != a.cols()) throw InputError("Kronecker factors must be square");
    ModeFactor f;
    f.kind_ = Kind::Dense;
    f.n_ = a.rows();
    f.dense_ = std::move(a);
    return f;
}

MatrixXd ModeFactor::to_matrix() const {
    switch (kind_) {
        case Kind::Identity: return MatrixXd::Identity(n_, n_);
        case Kind::Diagonal: return diag_.asDiagonal();
        case Kind::Dense: return dense_;
    }
    return {};
}

MatrixXd ModeFactor::apply(const MatrixXd& x) const {
    if (x.rows() != n_) throw InputError("factor size does not match operand rows");
    switch (kind_) {
        case Kind::Identity: return x;
        case Kind::Diagonal: return diag_.asDiagonal() * x;
        case Kind::Dense: return dense_ * x;
    }
    return {};
}

bool ModeFactor::operator==(const ModeFactor& other) const {
    if (kind_ != other.kind_ || n_ != other.n_) return false;
    switch (kind_) {
        case Kind::Identity: return true;
        case Kind::Diagonal: return diag_ == other.diag_;
        case Kind::Dense: return dense_ == other.dense_;
    }
    return false;
}

KronSumOperator::KronSumOperator(Dims dims) : dims_(std::move(dims)) {
    checked_element_count(dims_);
    for (Index n : dims_) table_.push_back({ModeFactor::identity(n)});
}

int KronSumOperator::intern(int mode, const ModeFactor& f) {
    auto& row = table_[static_cast<std::size_t>(mode)];
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] == f) return static_cast<int>(i);
    row.push_back(f);
    return static_cast<int>(row.size() - 1);
}

void KronSumOperator::add_term(double coeff, const std::map<int, ModeFactor>& factors) {
    KronTerm term{coeff, std::vector<int>(dims_.size(), 0)};
    for (const auto& [mode, f] : factors) {
        if (mode < 0 || mode >= order()) throw InputError("Kronecker factor mode out of range");
        if (f.size() != dims_[static_cast<std::size_t>(mode)])
            throw InputError("Kronecker factor size does not match mode " + std::to_string(mode));
        term.factor_ids[static_cast<std::size_t>(mode)] = intern(mode, f);
    }
    terms_.push_back(std::move(term));
}

const ModeFactor& KronSumOperator::factor(int mode, int id) const {
    return table_.at(static_cast<std::size_t>(mode)).at(static_cast<std::size_t>(id));
}

std::size_t KronSumOperator::distinct_factor_count(int mode) const {
    return table_.at(static_cast<std::size_t>(mode)).size();
}

MatrixXd KronSumOperator::assemble() const {
    const Index total = checked_element_count(dims_);
    checked_element_count({total, total});
    MatrixXd full = MatrixXd::Zero(total, total);
    for (const auto& term : terms_) {
        MatrixXd k = MatrixXd::Ones(1, 1);
        for (int mode = 0; mode < order(); ++mode) {
            const MatrixXd a = factor(mode, term.factor_ids[static_cast<std::size_t>(mode)]).to_matrix();
            MatrixXd next(a.rows() * k.rows(), a.cols() * k.cols());
            for (Index i = 0; i < a.rows(); ++i)
                for (Index j = 0; j < a.cols(); ++j)
                    next.block(i * k.rows(), j * k.cols(), k.rows(), k.cols()) = a(i, j) * k;
            k = std::move(next);
        }
        full += term.coeff * k;
    }
    return full;
}

DenseTensor apply_dense(const KronSumOperator& op, const DenseTensor& t) {
    if (t.dims() != op.dims()) throw InputError("apply_dense: tensor dims do not match operator dims");
    DenseTensor out(t.dims());
    for (const auto& term : op.terms()) {
        DenseTensor y = t;
        for (int mode = 0; mode < op.order(); ++mode) {
            const int id = term.factor_ids[static_cast<std::size_t>(mode)];
            if (id == 0) continue;
            const ModeFactor& f = op.factor(mode, id);
            y = (f.kind() == ModeFactor::Kind::Diagonal) ? mode_scale(y, mode, f.diag()) : mode_apply(y, mode, f.matrix());
        }
        out.mutable_data() += term.coeff * y.data();
    }
    return out;
}

HTensor apply_ht(const KronSumOperator& op, const HTensor& h) {
    if (h.dims() != op.dims()) throw InputError("apply_ht: tensor dims do not match operator dims");
    const auto& tree = h.tree();
    const int nn = tree.node_count();
    const std::size_t nterms = op.term_count();

    // slot[t][term]: which distinct restriction of the term to the modes of t it uses.
    std::vector<std::vector<int>> slot(static_cast<std::size_t>(nn), std::vector<int>(nterms));
    std::vector<std::vector<std::size_t>> representative(static_cast<std::size_t>(nn));
    for (int t = 0; t < nn; ++t) {
        std::map<std::vector<int>, int> seen;
        for (std::size_t term = 0; term < nterms; ++term) {
            std::vector<int> key;
            for (int k : tree.node(t).modes.modes()) key.push_back(op.terms()[term].factor_ids[static_cast<std::size_t>(k)]);
            auto [it, inserted] = seen.emplace(key, static_cast<int>(seen.size()));
            if (inserted) representative[static_cast<std::size_t>(t)].push_back(term);
            slot[static_cast<std::size_t>(t)][term] = it->second;
        }
    }
    auto count = [&](int t) { return static_cast<Index>(representative[static_cast<std::size_t>(t)].size()); };

    std::vector<MatrixXd> f(static_cast<std::size_t>(nn));
    for (int t = 0; t < nn; ++t) {
        const auto& node = tree.node(t);
        const auto ts = static_cast<std::size_t>(t);
        const MatrixXd& src = h.factor(t);
        if (node.is_leaf()) {
            const int mode = node.modes.front();
            const Index r = src.cols();
            f[ts].resize(src.rows(), count(t) * r);
            for (Index s = 0; s < count(t); ++s) {
                const std::size_t term = representative[ts][static_cast<std::size_t>(s)];
                const int id = op.terms()[term].factor_ids[static_cast<std::size_t>(mode)];
                f[ts].middleCols(s * r, r) = op.factor(mode, id).apply(src);
            }
            continue;
        }
        const Index rl = h.rank(node.left), rr = h.rank(node.right), rt = src.cols();
        const Index kl = count(node.left) * rl, kr = count(node.right) * rr;
        auto place = [&](Eigen::Ref<VectorXd> col, std::size_t term, Index j, double scale) {
            Eigen::Map<MatrixXd> s(col.data(), kl, kr);
            const Index ol = slot[static_cast<std::size_t>(node.left)][term] * rl;
            const Index orr = slot[static_cast<std::size_t>(node.right)][term] * rr;
            s.block(ol, orr, rl, rr) += scale * transfer_slice(src, rl, rr, j);
        };
        if (t == 0) {
            f[ts] = MatrixXd::Zero(kl * kr, 1);
            for (std::size_t term = 0; term < nterms; ++term) place(f[ts].col(0), term, 0, op.terms()[term].coeff);
            continue;
        }
        f[ts] = MatrixXd::Zero(kl * kr, count(t) * rt);
        for (Index s = 0; s < count(t); ++s) {
            const std::size_t term = representative[ts][static_cast<std::size_t>(s)];
            for (Index j = 0; j < rt; ++j) place(f[ts].col(s * rt + j), term, j, 1.0);
        }
    }
    return HTensor(h.tree_ptr(), h.dims(), std::move(f));
}

}  // namespace htstep
