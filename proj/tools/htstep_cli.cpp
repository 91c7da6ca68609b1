#include "htstep/commands.hpp"
#include "htstep/errors.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace htstep;

namespace {

struct RunFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string preset, scheme, out_dir, mode, reference;
    double dt = 0.0, T = 0.0;
    long n = 0, rank = 0;
    bool timing = false;

    void add_to(CLI::App* app) {
        app->add_option("-c,--config", config_path, "key = value config file");
        app->add_option("--set", overrides, "override a config key: --set key=value (repeatable)");
        app->add_option("--preset", preset, "fp2d-paper | fp4d-paper | custom");
        app->add_option("--scheme", scheme, "euler | midpoint | ab1 .. ab5");
        app->add_option("--dt", dt, "time step");
        app->add_option("--T", T, "final time");
        app->add_option("-n,--n", n, "grid points per mode");
        app->add_option("--mode", mode, "adaptive | fixed-rank");
        app->add_option("--rank", rank, "rank cap for fixed-rank mode");
        app->add_option("--reference", reference, "none | co-run | from-file");
        app->add_option("-o,--out", out_dir, "output directory");
        app->add_flag("--timing", timing, "record wall time per step");
    }

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        std::vector<std::string> flags;
        if (!preset.empty()) flags.push_back("preset=" + preset);
        if (!scheme.empty()) flags.push_back("scheme=" + scheme);
        if (dt > 0.0) flags.push_back("dt=" + format_double(dt));
        if (T > 0.0) flags.push_back("T=" + format_double(T));
        if (n != 0) flags.push_back("n=" + std::to_string(n));
        if (!mode.empty()) flags.push_back("mode=" + mode);
        if (rank != 0) flags.push_back("rank=" + std::to_string(rank));
        if (!reference.empty()) flags.push_back("reference=" + reference);
        if (!out_dir.empty()) flags.push_back("out_dir=" + out_dir);
        if (timing) flags.push_back("timing=true");
        apply_overrides(cfg, flags);
        apply_overrides(cfg, overrides);
        return cfg;
    }
};

int with_config(const RunFlags& flags, const std::function<int(const RunConfig&)>& fn) {
    try {
        return fn(flags.resolve());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-adaptive step-truncation integrators in hierarchical Tucker format"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "integrate a problem and write steps.csv, final.ht, summary.json");
    run_flags.add_to(run);

    RunFlags conv_flags;
    std::vector<double> dts;
    auto* conv = app.add_subcommand("convergence", "global error against a shared RK4 reference for several dt");
    conv_flags.add_to(conv);
    conv->add_option("--dts", dts, "time steps (at least three)")->required()->delimiter(',');

    std::string suite;
    std::uint64_t seed = 0;
    long cases = 0;
    auto* prop = app.add_subcommand("proptest", "randomized property suites, one JSON line per suite");
    prop->add_option("suite", suite, "suite name or 'all'")->required();
    prop->add_option("--seed", seed, "RNG seed");
    prop->add_option("--cases", cases, "instances per suite (0 = default)");

    TruncateRequest treq;
    double eps = -1.0, rel_eps = -1.0;
    long trank = 0;
    auto* trunc = app.add_subcommand("truncate", "truncate an HT or dense container file");
    trunc->add_option("input", treq.input, "input container")->required();
    trunc->add_option("output", treq.output, "output HT container")->required();
    trunc->add_option("--eps", eps, "absolute Frobenius tolerance");
    trunc->add_option("--rel-eps", rel_eps, "tolerance relative to the input norm");
    trunc->add_option("--rank", trank, "fixed rank cap at every node");
    trunc->add_option("--tree", treq.tree, "dimension tree for dense input: balanced | linear");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (run->parsed())
        return with_config(run_flags, [](const RunConfig& c) { return cmd_run(c, std::cout, std::cerr); });
    if (conv->parsed())
        return with_config(conv_flags, [&](const RunConfig& c) { return cmd_convergence(c, dts, std::cout, std::cerr); });
    if (prop->parsed()) return cmd_proptest(suite, seed, cases, std::cout, std::cerr);
    if (eps >= 0.0) treq.eps = eps;
    if (rel_eps >= 0.0) treq.rel_eps = rel_eps;
    if (trank > 0) treq.rank = trank;
    return cmd_truncate(treq, std::cout, std::cerr);
}
