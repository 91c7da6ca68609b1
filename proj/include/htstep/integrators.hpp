#pragma once

#include "htstep/htensor.hpp"
#include "htstep/kron_operator.hpp"
#include "htstep/spectral.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace htstep {

class SchemeSpec {
public:
    enum class Kind { Euler, Midpoint, AdamsBashforth };

    static SchemeSpec euler();
    static SchemeSpec midpoint();
    static SchemeSpec adams_bashforth(int s);
    /// euler, midpoint, ab1 .. ab5.
    static SchemeSpec parse(const std::string& name);

    Kind kind() const { return kind_; }
    /// Number of past states the scheme consumes (1 for one-step schemes).
    int steps() const { return steps_; }
    int order() const;
    std::string name() const;
    std::vector<double> weights() const;

private:
    Kind kind_ = Kind::Euler;
    int steps_ = 1;
};

/// Adams-Bashforth weights b_0..b_{s-1}; b_j multiplies N(f_{k-j}).
std::vector<double> ab_coefficients(int s);

/// Scaling constants of the truncation thresholds:
/// eps_alpha = A dt^{p+1} (solution), eps_beta = B dt^p (increment),
/// eps_gamma(j) = G_j dt^q (inner stages; q = 1 for midpoint, q = s for AB(s)).
struct ThresholdPolicy {
    double A = 0.0;
    double B = 0.0;
    std::vector<double> G;

    /// eps_r = M2 dt^2 on the solution, eps_s = M1 dt on the increment.
    static ThresholdPolicy euler(double M1, double M2);
    static ThresholdPolicy midpoint(double A, double B, double G);
    static ThresholdPolicy adams_bashforth(double A, double B, std::vector<double> G);

    void validate() const;
};

struct Thresholds {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> gamma;
};

/// Decimal-exact c * dt^power: c and dt are taken at their shortest round-trip
/// decimal values and the product is rounded once.
double decimal_scaled_power(double c, double dt, int power);

Thresholds threshold_schedule(const SchemeSpec& scheme, double dt, const ThresholdPolicy& policy);

/// Which truncation to apply at each place of a step; an empty slot means no truncation.
struct StepControls {
    std::optional<TruncationControl> alpha;
    std::optional<TruncationControl> beta;
    std::vector<std::optional<TruncationControl>> gamma;

    static StepControls adaptive(const Thresholds& th);
    /// Fixed-rank step truncation: only the new solution is truncated.
    static StepControls fixed_rank(const TruncationControl& caps);
};

struct StepResult {
    HTensor next;
    double err_alpha = 0.0;
    double err_beta = 0.0;
    std::vector<double> err_gamma;
};

StepResult step_euler(const HTensor& f, const KronSumOperator& op, double dt, const StepControls& c);
StepResult step_euler(const HTensor& f, const KronSumOperator& op, double dt, const Thresholds& th);

StepResult step_midpoint(const HTensor& f, const KronSumOperator& op, double dt, const StepControls& c);
StepResult step_midpoint(const HTensor& f, const KronSumOperator& op, double dt, const Thresholds& th);

/// history = {f_k, f_{k-1}, ..., f_{k-s+1}}, newest first.
StepResult step_ab(const std::vector<HTensor>& history, const KronSumOperator& op, double dt, const StepControls& c,
                   const std::vector<double>& weights);
StepResult step_ab(const std::vector<HTensor>& history, const KronSumOperator& op, double dt, const Thresholds& th,
                   const std::vector<double>& weights);

struct StepRecord {
    long k = 0;
    double t = 0.0;
    std::vector<Index> ranks;
    Index max_rank = 0;
    double eps_alpha = 0.0;
    double eps_beta = 0.0;
    std::vector<double> eps_gamma;
    double err_alpha = 0.0;
    double err_beta = 0.0;
    std::vector<double> err_gamma;
    double mass = 0.0;
    std::optional<double> err_l2;
    double wall_ms = 0.0;
    /// True for the midpoint steps that start a multistep scheme.
    bool startup = false;

    /// Solution truncation error estimate (the eps_alpha truncation).
    double trunc_err_est() const { return err_alpha; }
    /// Every truncation error estimate within its threshold.
    bool thresholds_respected() const;
};

enum class RankMode { Adaptive, FixedRank };

struct IntegrationOptions {
    SchemeSpec scheme = SchemeSpec::euler();
    double dt = 0.0;
    double T = 0.0;
    ThresholdPolicy policy;
    /// Policy for the midpoint steps that start AB(s); defaults to A, B and G_0 of `policy`.
    std::optional<ThresholdPolicy> startup_policy;
    RankMode mode = RankMode::Adaptive;
    std::optional<TruncationControl> rank_caps;
    /// Returns the L2 error of the state at (k, t) when a reference is available.
    std::function<std::optional<double>(long, double, const HTensor&)> error_probe;
    std::function<void(const StepRecord&, const HTensor&)> on_step;
    bool timing = false;
    long checkpoint_stride = 0;
    std::string checkpoint_path;
    /// Resume from a checkpoint written by an earlier run with the same options.
    std::string restart_path;
};

struct IntegrationResult {
    HTensor final_state;
    std::vector<StepRecord> records;
    double initial_mass = 0.0;
    long steps = 0;
};

/// Number of steps N with N * dt = T; throws InputError otherwise.
long step_count(double T, double dt);

IntegrationResult integrate(const KronSumOperator& op, const HTensor& f0, const PeriodicGrid& grid,
                            const IntegrationOptions& opts);

void write_step_csv(std::ostream& os, const std::vector<StepRecord>& records);
std::string format_double(double v);

}  // namespace htstep
