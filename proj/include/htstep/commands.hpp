#pragma once

#include "htstep/integrators.hpp"
#include "htstep/run_config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace htstep {

/// Exit codes of the command-line front-end.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitConfig = 2, kExitNumerical = 3 };

struct RunOutcome {
    IntegrationResult result;
    /// L2 error of the final state when a reference was available.
    std::optional<double> final_error;
    Index max_rank = 0;
    double wall_seconds = 0.0;
    /// ||ref(dt_ref) - ref(dt_ref / 2)||_{L2} at T for co-run references.
    std::optional<double> reference_halving_gap;
};

/// Runs the configured integration without touching the file system (apart from
/// checkpoints and reference trajectories requested by the config).
RunOutcome execute_run(const RunConfig& cfg);

struct ConvergencePoint {
    double dt = 0.0;
    /// L2 error at T; NaN when the run failed.
    double error = 0.0;
    Index max_rank = 0;
    long steps = 0;
    std::string status = "ok";
    std::vector<StepRecord> records;
};

struct ConvergenceStudy {
    std::vector<ConvergencePoint> points;
    int order = 1;
    double reference_dt = 0.0;
    double reference_halving_gap = 0.0;
    /// Least-squares slope of log(error) against log(dt) over the successful points.
    double slope = 0.0;
    /// max_i error_i / dt_i^order
    double q_hat = 0.0;

    bool all_ok() const;
};

/// One run per dt against a shared dense RK4 reference at T.
ConvergenceStudy convergence_study(const RunConfig& cfg, const std::vector<double>& dts);

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_convergence(const RunConfig& cfg, const std::vector<double>& dts, std::ostream& out, std::ostream& err);
/// `suite` may be "all". One JSON object per line on `out`.
int cmd_proptest(const std::string& suite, std::uint64_t seed, long cases, std::ostream& out, std::ostream& err);

struct TruncateRequest {
    std::string input;
    std::string output;
    std::optional<double> eps;
    std::optional<double> rel_eps;
    std::optional<Index> rank;
    std::string tree = "balanced";
};

/// Truncates an HT or dense container file and writes an HT container.
int cmd_truncate(const TruncateRequest& req, std::ostream& out, std::ostream& err);

}  // namespace htstep
