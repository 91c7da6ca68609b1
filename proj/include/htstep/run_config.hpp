#pragma once

#include "htstep/fokker_planck.hpp"
#include "htstep/integrators.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace htstep {

enum class ReferencePolicy { None, CoRun, FromFile };

/// Settings of one run. Unset optional fields fall back to the preset (for dt, T, n)
/// or to the default scaling constants.
///
/// Text form, one `key = value` per line, `#` starts a comment:
///
///   preset            fp2d-paper | fp4d-paper | custom
///   d, n              order and grid points per mode (n even, >= 4)
///   gamma, xi, phi    drift functions: sin cos exp_sin_plus_1 exp_cos zero
///   sigma             noise amplitude (diffusion sigma^2 / 2)
///   ic_terms          number of rank-one pairs in the 4D initial condition
///   tree              balanced | linear
///   scheme            euler | midpoint | ab1 .. ab5
///   dt, T             step and final time; T / dt must be an integer
///   M1, M2            Euler constants (increment, solution)
///   A, B, G           solution, increment and stage constants; G may be a list "1e2, 1e2"
///   start_A, start_B, start_G   midpoint start-up constants for ab2 .. ab5
///   mode              adaptive | fixed-rank
///   rank              rank cap in fixed-rank mode
///   reference         none | co-run | from-file
///   reference_dt      RK4 step of the co-run reference (defaults to dt)
///   reference_path    trajectory file for from-file
///   reference_save    write the co-run reference trajectory here
///   reference_stride  steps between saved reference frames
///   out_dir           output directory
///   checkpoint_stride steps between checkpoints (0 disables)
///   restart           checkpoint file to resume from
///   seed              RNG seed (randomized checks only)
///   timing            true | false; wall_ms in the step CSV is 0 unless true
struct RunConfig {
    std::string preset = "fp2d-paper";
    int d = 2;
    Index n = 0;
    std::string gamma = "sin";
    std::string xi = "cos";
    std::string phi = "exp_sin_plus_1";
    double sigma = 2.0;
    int ic_terms = 10;
    std::string tree = "balanced";

    std::string scheme = "euler";
    std::optional<double> dt;
    std::optional<double> T;

    std::optional<double> M1, M2, A, B;
    std::vector<double> G;
    std::optional<double> start_A, start_B, start_G;

    RankMode mode = RankMode::Adaptive;
    Index rank = 0;

    ReferencePolicy reference = ReferencePolicy::None;
    std::optional<double> reference_dt;
    std::string reference_path;
    std::string reference_save;
    long reference_stride = 1;

    std::string out_dir = "out";
    long checkpoint_stride = 0;
    std::string restart;
    std::uint64_t seed = 0;
    bool timing = false;

    /// Assigns one key; throws ConfigError for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    double step() const;
    double final_time() const;
    Index grid_points() const;
    SchemeSpec scheme_spec() const;
    ThresholdPolicy policy() const;
    std::optional<ThresholdPolicy> startup_policy() const;

    /// Throws ConfigError when the settings are inconsistent.
    void validate() const;

    FPProblem problem() const;
    IntegrationOptions integration_options() const;

    /// Resolved settings as `key = value` lines; reading them back gives the same run.
    std::string to_text() const;
};

RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::string& path);

/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace htstep
