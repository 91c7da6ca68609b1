#include "htstep/fokker_planck.hpp"

#include "htstep/errors.hpp"

#include <cmath>
#include <map>

namespace htstep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int wrap(int i, int d) { return ((i % d) + d) % d; }

constexpr double kIcTolerance = 1e-12;

HTensor normalized_compressed(const HTensor& h, const PeriodicGrid& grid) {
    const double m0 = quad_integral(h, grid);
    if (!(m0 > 0.0) || !std::isfinite(m0)) throw NumericalError("initial condition has non-positive mass");
    const HTensor unit = h.scaled(1.0 / m0);
    return ht_truncate(unit, TruncationControl::tolerance(kIcTolerance * ht_norm(unit))).tensor;
}

}  // namespace

DriftFunction DriftFunction::by_name(const std::string& name) {
    if (name == "sin") return Builtin::Sin;
    if (name == "cos") return Builtin::Cos;
    if (name == "exp_sin_plus_1") return Builtin::ExpSinPlusOne;
    if (name == "exp_cos") return Builtin::ExpCos;
    if (name == "zero") return Builtin::Zero;
    throw InputError("unknown drift function '" + name + "'");
}

std::string DriftFunction::name() const {
    if (std::holds_alternative<VectorXd>(fn_)) return "tabulated";
    switch (std::get<Builtin>(fn_)) {
        case Builtin::Zero: return "zero";
        case Builtin::Sin: return "sin";
        case Builtin::Cos: return "cos";
        case Builtin::ExpSinPlusOne: return "exp_sin_plus_1";
        case Builtin::ExpCos: return "exp_cos";
    }
    return "zero";
}

VectorXd DriftFunction::sample(const PeriodicGrid& grid) const {
    if (const auto* v = std::get_if<VectorXd>(&fn_)) {
        if (v->size() != grid.n()) throw InputError("tabulated drift has the wrong number of samples");
        return *v;
    }
    switch (std::get<Builtin>(fn_)) {
        case Builtin::Zero: return VectorXd::Zero(grid.n());
        case Builtin::Sin: return grid.sample([](double x) { return std::sin(x); });
        case Builtin::Cos: return grid.sample([](double x) { return std::cos(x); });
        case Builtin::ExpSinPlusOne: return grid.sample([](double x) { return std::exp(std::sin(x)) + 1.0; });
        case Builtin::ExpCos: return grid.sample([](double x) { return std::exp(std::cos(x)); });
    }
    return VectorXd::Zero(grid.n());
}

bool DriftFunction::is_zero() const {
    if (const auto* v = std::get_if<VectorXd>(&fn_)) return v->isZero(0.0);
    return std::get<Builtin>(fn_) == Builtin::Zero;
}

DriftSpec DriftSpec::paper_2d() {
    using B = DriftFunction::Builtin;
    return {B::Sin, B::Cos, B::ExpSinPlusOne, 2.0};
}

DriftSpec DriftSpec::paper_4d() {
    using B = DriftFunction::Builtin;
    return {B::Sin, B::ExpSinPlusOne, B::Cos, 2.0};
}

DriftSpec DriftSpec::zero(double sigma) { return {{}, {}, {}, sigma}; }

KronSumOperator build_fp_operator(int d, Index n, const DriftSpec& drift) {
    if (d < 2) throw InputError("Fokker-Planck operator needs d >= 2");
    if (!(drift.sigma > 0.0)) throw InputError("sigma must be positive");
    const PeriodicGrid grid(n);
    const MatrixXd d1 = diff_matrix(n, 1);
    const MatrixXd d2 = diff_matrix(n, 2);
    const VectorXd gamma = drift.gamma.sample(grid);
    const VectorXd xi = drift.xi.sample(grid);
    const VectorXd phi = drift.phi.sample(grid);

    KronSumOperator op(Dims(static_cast<std::size_t>(d), n));
    struct Summand {
        double sign;
        std::vector<std::pair<int, const VectorXd*>> parts;
        bool zero;
    };
    for (int i = 0; i < d; ++i) {
        const Summand summands[] = {
            {+1.0, {{wrap(i + 1, d), &gamma}, {wrap(i - 1, d), &xi}}, drift.gamma.is_zero() || drift.xi.is_zero()},
            {-1.0, {{wrap(i - 2, d), &gamma}, {wrap(i - 1, d), &xi}}, drift.gamma.is_zero() || drift.xi.is_zero()},
            {-1.0, {{i, &phi}}, drift.phi.is_zero()},
        };
        for (const auto& s : summands) {
            if (s.zero) continue;
            std::map<int, VectorXd> per_mode;
            for (const auto& [mode, samples] : s.parts) {
                auto [it, inserted] = per_mode.emplace(mode, *samples);
                if (!inserted) it->second = it->second.cwiseProduct(*samples);
            }
            std::map<int, ModeFactor> factors;
            for (const auto& [mode, samples] : per_mode)
                if (mode != i) factors.emplace(mode, ModeFactor::diagonal(samples));
            const auto own = per_mode.find(i);
            factors.emplace(i, ModeFactor::dense(own == per_mode.end() ? d1 : MatrixXd(d1 * own->second.asDiagonal())));
            op.add_term(-s.sign, factors);
        }
    }
    const double diffusion = 0.5 * drift.sigma * drift.sigma;
    for (int i = 0; i < d; ++i) op.add_term(diffusion, {{i, ModeFactor::dense(d2)}});
    return op;
}

DenseTensor drift_component(int d, Index n, const DriftSpec& drift, int i) {
    const PeriodicGrid grid(n);
    const VectorXd gamma = drift.gamma.sample(grid);
    const VectorXd xi = drift.xi.sample(grid);
    const VectorXd phi = drift.phi.sample(grid);
    return DenseTensor::from_function(Dims(static_cast<std::size_t>(d), n), [&](std::span<const Index> idx) {
        auto at = [&](int k) { return idx[static_cast<std::size_t>(wrap(k, d))]; };
        return (gamma[at(i + 1)] - gamma[at(i - 2)]) * xi[at(i - 1)] - phi[at(i)];
    });
}

DenseTensor ic_2d_samples(Index n) {
    const PeriodicGrid grid(n);
    return DenseTensor::from_function({n, n}, [&](std::span<const Index> idx) {
        const double x1 = grid.node(idx[0]);
        const double x2 = grid.node(idx[1]);
        const double a = std::sin(x1 - x2);
        const double b = std::sin(x1 + x2);
        return std::exp(a * a) + b * b;
    });
}

HTensor ic_2d(Index n, TreePtr tree) {
    if (!tree) tree = make_tree("balanced", 2);
    const PeriodicGrid grid(n);
    DenseTensor f = ic_2d_samples(n);
    f.mutable_data() /= quad_integral(f, grid);
    return ht_from_dense(f, std::move(tree), TruncationControl::tolerance(kIcTolerance * f.norm())).tensor;
}

HTensor ic_4d(Index n, int M, TreePtr tree) {
    if (M < 1) throw InputError("ic_4d needs M >= 1");
    if (!tree) tree = make_tree("balanced", 4);
    if (tree->order() != 4) throw InputError("ic_4d needs a tree over 4 modes");
    const PeriodicGrid grid(n);
    HTensor sum;
    for (int j = 1; j <= M; ++j) {
        const double k1 = 2.0 * j - 1.0;
        const double k2 = 2.0 * j;
        const double s1 = std::ldexp(1.0, -2 * (j - 1));
        const double s2 = std::ldexp(1.0, -(2 * j - 1));
        const VectorXd a = grid.sample([&](double x) { return (std::sin(k1 * x) + 1.0) * s1; });
        const VectorXd b = grid.sample([&](double x) { return std::exp(std::cos(k2 * x)) * s2; });
        const HTensor ta = HTensor::rank_one(tree, {a, a, a, a});
        const HTensor tb = HTensor::rank_one(tree, {b, b, b, b});
        const HTensor pair = ht_linear_combine(1.0, ta, 1.0, tb);
        sum = (j == 1) ? pair : ht_linear_combine(1.0, sum, 1.0, pair);
    }
    return normalized_compressed(sum, grid);
}

MatrixXd marginal_12(const HTensor& h, const PeriodicGrid& grid) {
    if (h.order() != 4) throw InputError("marginal_12 needs a 4D tensor");
    const VectorXd w = VectorXd::Constant(grid.n(), grid.weight());
    const DenseTensor m = ht_contract_modes(h, {std::nullopt, std::nullopt, w, w});
    return Eigen::Map<const MatrixXd>(m.data().data(), m.dims()[0], m.dims()[1]);
}

double mass(const HTensor& h, const PeriodicGrid& grid) { return quad_integral(h, grid); }
double mass(const DenseTensor& t, const PeriodicGrid& grid) { return quad_integral(t, grid); }

FPProblem make_problem(int d, Index n, const DriftSpec& drift, int ic_terms, const std::string& tree_name) {
    FPProblem p;
    p.d = d;
    p.n = n;
    p.drift = drift;
    p.ic_terms = ic_terms;
    p.tree = make_tree(tree_name, d);
    p.op = build_fp_operator(d, n, drift);
    if (d == 2) {
        p.f0 = ic_2d(n, p.tree);
    } else if (d == 4) {
        p.f0 = ic_4d(n, ic_terms, p.tree);
    } else {
        throw InputError("initial conditions exist for d = 2 and d = 4 only");
    }
    return p;
}

FPProblem make_preset(const std::string& name, Index n_override, const std::string& tree_name) {
    FPProblem p;
    if (name == "fp2d-paper") {
        p = make_problem(2, n_override > 0 ? n_override : 50, DriftSpec::paper_2d(), 0, tree_name);
    } else if (name == "fp4d-paper") {
        p = make_problem(4, n_override > 0 ? n_override : 20, DriftSpec::paper_4d(), 10, tree_name);
    } else {
        throw InputError("unknown preset '" + name + "'");
    }
    p.name = name;
    return p;
}

}  // namespace htstep
