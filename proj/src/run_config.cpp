#include "htstep/run_config.hpp"

#include "htstep/errors.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace htstep {

namespace {

struct PresetDefaults {
    Index n;
    double dt;
    double T;
};

std::optional<PresetDefaults> preset_defaults(const std::string& name) {
    if (name == "fp2d-paper") return PresetDefaults{50, 6.25e-4, 1.0};
    if (name == "fp4d-paper") return PresetDefaults{20, 1e-3, 0.1};
    return std::nullopt;
}

// Scaling constants shared by every experiment.
constexpr double kEulerM = 1e2;
constexpr double kAB = 1e3;
constexpr double kG = 1e2;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return x;
}

long to_long(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError("'" + key + "' expects at least one number");
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "preset") preset = v;
    else if (key == "d") d = static_cast<int>(to_long(key, v));
    else if (key == "n") n = to_long(key, v);
    else if (key == "gamma") gamma = v;
    else if (key == "xi") xi = v;
    else if (key == "phi") phi = v;
    else if (key == "sigma") sigma = to_double(key, v);
    else if (key == "ic_terms") ic_terms = static_cast<int>(to_long(key, v));
    else if (key == "tree") tree = v;
    else if (key == "scheme") scheme = v;
    else if (key == "dt") dt = to_double(key, v);
    else if (key == "T") T = to_double(key, v);
    else if (key == "M1") M1 = to_double(key, v);
    else if (key == "M2") M2 = to_double(key, v);
    else if (key == "A") A = to_double(key, v);
    else if (key == "B") B = to_double(key, v);
    else if (key == "G") G = to_list(key, v);
    else if (key == "start_A") start_A = to_double(key, v);
    else if (key == "start_B") start_B = to_double(key, v);
    else if (key == "start_G") start_G = to_double(key, v);
    else if (key == "mode") {
        if (v == "adaptive") mode = RankMode::Adaptive;
        else if (v == "fixed-rank") mode = RankMode::FixedRank;
        else throw ConfigError("mode must be adaptive or fixed-rank, got '" + v + "'");
    } else if (key == "rank") rank = to_long(key, v);
    else if (key == "reference") {
        if (v == "none") reference = ReferencePolicy::None;
        else if (v == "co-run") reference = ReferencePolicy::CoRun;
        else if (v == "from-file") reference = ReferencePolicy::FromFile;
        else throw ConfigError("reference must be none, co-run or from-file, got '" + v + "'");
    } else if (key == "reference_dt") reference_dt = to_double(key, v);
    else if (key == "reference_path") reference_path = v;
    else if (key == "reference_save") reference_save = v;
    else if (key == "reference_stride") reference_stride = to_long(key, v);
    else if (key == "out_dir") out_dir = v;
    else if (key == "checkpoint_stride") checkpoint_stride = to_long(key, v);
    else if (key == "restart") restart = v;
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_long(key, v));
    else if (key == "timing") timing = to_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

double RunConfig::step() const {
    if (dt) return *dt;
    if (auto p = preset_defaults(preset)) return p->dt;
    throw ConfigError("dt is required for a custom problem");
}

double RunConfig::final_time() const {
    if (T) return *T;
    if (auto p = preset_defaults(preset)) return p->T;
    throw ConfigError("T is required for a custom problem");
}

Index RunConfig::grid_points() const {
    if (n > 0) return n;
    if (auto p = preset_defaults(preset)) return p->n;
    throw ConfigError("n is required for a custom problem");
}

SchemeSpec RunConfig::scheme_spec() const {
    try {
        return SchemeSpec::parse(scheme);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

ThresholdPolicy RunConfig::policy() const {
    const SchemeSpec s = scheme_spec();
    if (s.kind() == SchemeSpec::Kind::Euler) return ThresholdPolicy::euler(M1.value_or(kEulerM), M2.value_or(kEulerM));
    std::vector<double> g = G.empty() ? std::vector<double>{kG} : G;
    if (s.kind() == SchemeSpec::Kind::Midpoint) return ThresholdPolicy::midpoint(A.value_or(kAB), B.value_or(kAB), g[0]);
    return ThresholdPolicy::adams_bashforth(A.value_or(kAB), B.value_or(kAB), std::move(g));
}

std::optional<ThresholdPolicy> RunConfig::startup_policy() const {
    const SchemeSpec s = scheme_spec();
    if (s.kind() != SchemeSpec::Kind::AdamsBashforth || s.steps() < 2) return std::nullopt;
    const ThresholdPolicy p = policy();
    return ThresholdPolicy::midpoint(start_A.value_or(p.A), start_B.value_or(p.B), start_G.value_or(p.G.front()));
}

void RunConfig::validate() const {
    if (preset != "custom" && !preset_defaults(preset)) throw ConfigError("unknown preset '" + preset + "'");
    if (preset == "custom" && (d < 2 || d > 16)) throw ConfigError("d must be between 2 and 16");
    const Index np = grid_points();
    if (np < 4 || np % 2 != 0) throw ConfigError("n must be even and at least 4, got " + std::to_string(np));
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (ic_terms < 1) throw ConfigError("ic_terms must be positive");
    if (tree != "balanced" && tree != "linear") throw ConfigError("tree must be balanced or linear");
    try {
        step_count(final_time(), step());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    for (const auto& c : {M1, M2, A, B, start_A, start_B, start_G})
        if (c && !(*c >= 0.0)) throw ConfigError("threshold constants must be non-negative");
    for (double g : G)
        if (!(g >= 0.0)) throw ConfigError("threshold constants must be non-negative");
    const SchemeSpec s = scheme_spec();
    if (s.kind() == SchemeSpec::Kind::AdamsBashforth && G.size() > 1 && static_cast<int>(G.size()) != s.steps())
        throw ConfigError("G needs 1 or " + std::to_string(s.steps()) + " values for " + s.name());
    if (mode == RankMode::FixedRank && rank < 1) throw ConfigError("fixed-rank mode needs rank >= 1");
    if (reference == ReferencePolicy::FromFile && reference_path.empty())
        throw ConfigError("reference = from-file needs reference_path");
    if (reference_dt) {
        if (!(*reference_dt > 0.0)) throw ConfigError("reference_dt must be positive");
        const double ratio = step() / *reference_dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
            throw ConfigError("dt must be an integer multiple of reference_dt");
    }
    if (reference_stride < 1) throw ConfigError("reference_stride must be positive");
    if (checkpoint_stride < 0) throw ConfigError("checkpoint_stride must be non-negative");
}

FPProblem RunConfig::problem() const {
    validate();
    if (preset != "custom") return make_preset(preset, grid_points(), tree);
    try {
        DriftSpec drift{DriftFunction::by_name(gamma), DriftFunction::by_name(xi), DriftFunction::by_name(phi), sigma};
        return make_problem(d, grid_points(), drift, ic_terms, tree);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

IntegrationOptions RunConfig::integration_options() const {
    validate();
    IntegrationOptions o;
    o.scheme = scheme_spec();
    o.dt = step();
    o.T = final_time();
    o.policy = policy();
    o.startup_policy = startup_policy();
    o.mode = mode;
    if (mode == RankMode::FixedRank) o.rank_caps = TruncationControl::fixed_rank(rank);
    o.timing = timing;
    o.checkpoint_stride = checkpoint_stride;
    if (checkpoint_stride > 0) o.checkpoint_path = out_dir + "/checkpoint.bin";
    o.restart_path = restart;
    return o;
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << "preset = " << preset << '\n';
    if (preset == "custom") {
        os << "d = " << d << '\n'
           << "gamma = " << gamma << '\n'
           << "xi = " << xi << '\n'
           << "phi = " << phi << '\n'
           << "sigma = " << format_double(sigma) << '\n'
           << "ic_terms = " << ic_terms << '\n';
    }
    os << "n = " << grid_points() << '\n'
       << "tree = " << tree << '\n'
       << "scheme = " << scheme << '\n'
       << "dt = " << format_double(step()) << '\n'
       << "T = " << format_double(final_time()) << '\n';
    const ThresholdPolicy p = policy();
    if (scheme_spec().kind() == SchemeSpec::Kind::Euler) {
        os << "M1 = " << format_double(p.B) << '\n' << "M2 = " << format_double(p.A) << '\n';
    } else {
        os << "A = " << format_double(p.A) << '\n'
           << "B = " << format_double(p.B) << '\n'
           << "G = " << list_text(p.G) << '\n';
    }
    if (auto sp = startup_policy()) {
        os << "start_A = " << format_double(sp->A) << '\n'
           << "start_B = " << format_double(sp->B) << '\n'
           << "start_G = " << format_double(sp->G.front()) << '\n';
    }
    os << "mode = " << (mode == RankMode::Adaptive ? "adaptive" : "fixed-rank") << '\n';
    if (mode == RankMode::FixedRank) os << "rank = " << rank << '\n';
    const char* ref[] = {"none", "co-run", "from-file"};
    os << "reference = " << ref[static_cast<int>(reference)] << '\n';
    if (reference_dt) os << "reference_dt = " << format_double(*reference_dt) << '\n';
    if (!reference_path.empty()) os << "reference_path = " << reference_path << '\n';
    if (!reference_save.empty()) os << "reference_save = " << reference_save << '\n'
                                    << "reference_stride = " << reference_stride << '\n';
    os << "out_dir = " << out_dir << '\n'
       << "checkpoint_stride = " << checkpoint_stride << '\n';
    if (!restart.empty()) os << "restart = " << restart << '\n';
    os << "seed = " << seed << '\n' << "timing = " << (timing ? "true" : "false") << '\n';
    return os.str();
}

RunConfig parse_run_config(std::istream& is) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse_run_config(is);
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
        cfg.set(trim(o.substr(0, eq)), o.substr(eq + 1));
    }
}

}  // namespace htstep
