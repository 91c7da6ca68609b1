#pragma once

#include "htstep/htensor.hpp"
#include "htstep/kron_operator.hpp"
#include "htstep/spectral.hpp"

#include <string>
#include <variant>

namespace htstep {

/// A 2*pi-periodic scalar function: either a named built-in or samples on the grid.
class DriftFunction {
public:
    enum class Builtin { Zero, Sin, Cos, ExpSinPlusOne, ExpCos };

    DriftFunction(Builtin b = Builtin::Zero) : fn_(b) {}
    explicit DriftFunction(Eigen::VectorXd samples) : fn_(std::move(samples)) {}

    /// sin, cos, exp_sin_plus_1, exp_cos, zero.
    static DriftFunction by_name(const std::string& name);

    std::string name() const;
    Eigen::VectorXd sample(const PeriodicGrid& grid) const;
    bool is_zero() const;

private:
    std::variant<Builtin, Eigen::VectorXd> fn_;
};

/// Drift mu_i = gamma(x_{i+1}) xi(x_{i-1}) - gamma(x_{i-2}) xi(x_{i-1}) - phi(x_i), indices mod d.
struct DriftSpec {
    DriftFunction gamma;
    DriftFunction xi;
    DriftFunction phi;
    double sigma = 2.0;

    static DriftSpec paper_2d();
    static DriftSpec paper_4d();
    static DriftSpec zero(double sigma = 2.0);
};

/// -sum_i D_i (mu_i f) + (sigma^2 / 2) sum_i D_i^2 f in conservative form.
KronSumOperator build_fp_operator(int d, Index n, const DriftSpec& drift);

/// Drift component mu_i sampled on the full grid (used for checks and oracles).
DenseTensor drift_component(int d, Index n, const DriftSpec& drift, int i);

/// Unnormalized initial condition exp(sin^2(x1 - x2)) + sin^2(x1 + x2) on the grid.
DenseTensor ic_2d_samples(Index n);

/// Unit-mass 2D initial condition in HT format.
HTensor ic_2d(Index n, TreePtr tree = nullptr);

/// Unit-mass 4D initial condition: sum of 2M separable terms.
HTensor ic_4d(Index n, int M, TreePtr tree = nullptr);

/// Marginal over modes 3 and 4 of a 4D density.
Eigen::MatrixXd marginal_12(const HTensor& h, const PeriodicGrid& grid);

double mass(const HTensor& h, const PeriodicGrid& grid);
double mass(const DenseTensor& t, const PeriodicGrid& grid);

struct FPProblem {
    std::string name;
    int d = 2;
    Index n = 50;
    DriftSpec drift;
    int ic_terms = 10;
    TreePtr tree;
    KronSumOperator op{Dims{4, 4}};
    HTensor f0;

    PeriodicGrid grid() const { return PeriodicGrid(n); }
};

/// `fp2d-paper` or `fp4d-paper`; n_override > 0 replaces the preset grid size.
FPProblem make_preset(const std::string& name, Index n_override = 0, const std::string& tree_name = "balanced");

FPProblem make_problem(int d, Index n, const DriftSpec& drift, int ic_terms, const std::string& tree_name);

}  // namespace htstep
