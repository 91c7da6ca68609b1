#include "htstep/commands.hpp"

#include "htstep/errors.hpp"
#include "htstep/property_suites.hpp"
#include "htstep/reference_solver.hpp"
#include "htstep/tensor_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>

namespace htstep {

using nlohmann::json;

namespace {

template <typename Fn>
int exit_code_of(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BudgetError& e) {
        err << "size limit: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_text(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    return os;
}

double l2_distance(const DenseTensor& a, const DenseTensor& b, const PeriodicGrid& grid) {
    return l2_norm(dense_linear_combine(1.0, a, -1.0, b), grid);
}

long ratio_steps(double big, double small) { return std::lround(big / small); }

// Dense RK4 reference advanced lazily so the adaptive run can probe it at every step.
class CoRunReference {
public:
    CoRunReference(const FPProblem& p, double dt, double ref_dt, const std::string& save, long stride)
        : op_(p.op), grid_(p.grid()), state_(ht_to_dense(p.f0)), ref_dt_(ref_dt),
          substeps_(ratio_steps(dt, ref_dt)), stride_(stride) {
        if (!save.empty()) {
            writer_ = std::make_unique<TrajectoryWriter>(save);
            writer_->append(0.0, state_);
        }
    }

    double error(long k, const HTensor& f) {
        while (k_ < k) {
            for (long s = 0; s < substeps_; ++s) state_ = rk4_step(op_, state_, ref_dt_);
            ++k_;
            if (writer_ && k_ % stride_ == 0) writer_->append(static_cast<double>(k_ * substeps_) * ref_dt_, state_);
        }
        return l2_distance(ht_to_dense(f), state_, grid_);
    }

    const DenseTensor& state() const { return state_; }

private:
    const KronSumOperator& op_;
    PeriodicGrid grid_;
    DenseTensor state_;
    double ref_dt_;
    long substeps_;
    long stride_;
    long k_ = 0;
    std::unique_ptr<TrajectoryWriter> writer_;
};

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

json thresholds_json(const Thresholds& th) {
    return {{"alpha", th.alpha}, {"beta", th.beta}, {"gamma", th.gamma}};
}

}  // namespace

RunOutcome execute_run(const RunConfig& cfg) {
    const FPProblem p = cfg.problem();
    IntegrationOptions opts = cfg.integration_options();
    const PeriodicGrid grid = p.grid();
    if (opts.checkpoint_stride > 0) ensure_dir(cfg.out_dir);

    std::unique_ptr<CoRunReference> coref;
    std::vector<TrajectoryFrame> frames;
    const double ref_dt = cfg.reference_dt.value_or(opts.dt);
    if (cfg.reference == ReferencePolicy::CoRun) {
        coref = std::make_unique<CoRunReference>(p, opts.dt, ref_dt, cfg.reference_save, cfg.reference_stride);
        opts.error_probe = [&](long k, double, const HTensor& f) -> std::optional<double> { return coref->error(k, f); };
    } else if (cfg.reference == ReferencePolicy::FromFile) {
        frames = read_trajectory(cfg.reference_path);
        opts.error_probe = [&](long, double t, const HTensor& f) -> std::optional<double> {
            for (const auto& fr : frames)
                if (std::abs(fr.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
                    if (fr.f.dims() != f.dims()) throw InputError("reference trajectory has the wrong grid");
                    return l2_distance(ht_to_dense(f), fr.f, grid);
                }
            return std::nullopt;
        };
    }

    RunOutcome out;
    const auto start = std::chrono::steady_clock::now();
    out.result = integrate(p.op, p.f0, grid, opts);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& r : out.result.records) out.max_rank = std::max(out.max_rank, r.max_rank);
    if (!out.result.records.empty()) out.final_error = out.result.records.back().err_l2;

    if (coref && out.result.steps > 0) {
        const long steps = out.result.steps * ratio_steps(opts.dt, ref_dt);
        const DenseTensor half = integrate_reference(p.op, ht_to_dense(p.f0), 0.5 * ref_dt, 2 * steps);
        out.reference_halving_gap = l2_distance(coref->state(), half, grid);
    }
    return out;
}

bool ConvergenceStudy::all_ok() const {
    for (const auto& pt : points)
        if (pt.status != "ok") return false;
    return !points.empty();
}

ConvergenceStudy convergence_study(const RunConfig& cfg, const std::vector<double>& dts) {
    if (dts.size() < 3) throw ConfigError("a convergence study needs at least three step sizes");
    const FPProblem p = cfg.problem();
    const PeriodicGrid grid = p.grid();
    const double T = cfg.final_time();
    ConvergenceStudy study;
    study.order = cfg.scheme_spec().order();
    study.reference_dt = cfg.reference_dt.value_or(*std::min_element(dts.begin(), dts.end()));

    const DenseTensor f0 = ht_to_dense(p.f0);
    const long ref_steps = step_count(T, study.reference_dt);
    const DenseTensor ref = integrate_reference(p.op, f0, study.reference_dt, ref_steps);
    const DenseTensor half = integrate_reference(p.op, f0, 0.5 * study.reference_dt, 2 * ref_steps);
    study.reference_halving_gap = l2_distance(ref, half, grid);

    std::vector<double> xs, ys;
    for (double dt : dts) {
        RunConfig c = cfg;
        c.dt = dt;
        c.reference = ReferencePolicy::None;
        c.checkpoint_stride = 0;
        c.restart.clear();
        IntegrationOptions opts = c.integration_options();
        ConvergencePoint pt;
        pt.dt = dt;
        opts.on_step = [&](const StepRecord& r, const HTensor&) {
            pt.records.push_back(r);
            pt.max_rank = std::max(pt.max_rank, r.max_rank);
        };
        try {
            const IntegrationResult res = integrate(p.op, p.f0, grid, opts);
            pt.steps = res.steps;
            pt.error = l2_distance(ht_to_dense(res.final_state), ref, grid);
            if (!std::isfinite(pt.error)) throw NumericalError("non-finite error at T");
            xs.push_back(dt);
            ys.push_back(pt.error);
            study.q_hat = std::max(study.q_hat, pt.error / std::pow(dt, study.order));
        } catch (const NumericalError& e) {
            pt.error = std::numeric_limits<double>::quiet_NaN();
            pt.steps = static_cast<long>(pt.records.size());
            pt.status = std::string("diverged: ") + e.what();
        }
        study.points.push_back(std::move(pt));
    }
    study.slope = xs.size() >= 2 ? fit_loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
    return study;
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return exit_code_of(err, [&] {
        cfg.validate();
        ensure_dir(cfg.out_dir);
        {
            auto os = open_text(cfg.out_dir + "/config.txt");
            os << cfg.to_text();
        }
        const RunOutcome o = execute_run(cfg);
        {
            auto os = open_text(cfg.out_dir + "/steps.csv");
            write_step_csv(os, o.result.records);
        }
        save_ht(cfg.out_dir + "/final.ht", o.result.final_state);

        const auto& recs = o.result.records;
        long violations = 0;
        double mass_drift = 0.0;
        for (const auto& r : recs) {
            if (cfg.mode == RankMode::Adaptive && !r.thresholds_respected()) ++violations;
            mass_drift = std::max(mass_drift, std::abs(r.mass - o.result.initial_mass));
        }
        json s;
        s["scheme"] = cfg.scheme_spec().name();
        s["dt"] = cfg.step();
        s["T"] = cfg.final_time();
        s["steps"] = o.result.steps;
        s["final_error_l2"] = number_or_null(o.final_error);
        s["max_rank"] = o.max_rank;
        s["final_ranks"] = o.result.final_state.ranks();
        s["wall_time_s"] = o.wall_seconds;
        s["initial_mass"] = o.result.initial_mass;
        s["final_mass"] = recs.empty() ? o.result.initial_mass : recs.back().mass;
        s["max_mass_drift"] = mass_drift;
        s["threshold_violations"] = violations;
        s["reference_halving_gap"] = number_or_null(o.reference_halving_gap);
        if (cfg.mode == RankMode::Adaptive)
            s["thresholds"] = thresholds_json(threshold_schedule(cfg.scheme_spec(), cfg.step(), cfg.policy()));
        {
            auto os = open_text(cfg.out_dir + "/summary.json");
            os << s.dump(2) << '\n';
        }
        out << s.dump() << '\n';
        return kExitOk;
    });
}

int cmd_convergence(const RunConfig& cfg, const std::vector<double>& dts, std::ostream& out, std::ostream& err) {
    return exit_code_of(err, [&] {
        cfg.validate();
        const ConvergenceStudy st = convergence_study(cfg, dts);
        ensure_dir(cfg.out_dir);
        {
            auto os = open_text(cfg.out_dir + "/convergence.csv");
            os << "# htstep convergence v1\n" << "dt,error_l2,max_rank,steps,status\n";
            for (const auto& pt : st.points)
                os << format_double(pt.dt) << ',' << format_double(pt.error) << ',' << pt.max_rank << ',' << pt.steps
                   << ',' << pt.status << '\n';
        }
        json j;
        j["scheme"] = cfg.scheme_spec().name();
        j["order"] = st.order;
        j["T"] = cfg.final_time();
        j["reference_dt"] = st.reference_dt;
        j["reference_halving_gap"] = st.reference_halving_gap;
        j["slope"] = number_or_null(st.slope);
        j["q_hat"] = st.q_hat;
        json pts = json::array();
        for (const auto& pt : st.points)
            pts.push_back({{"dt", pt.dt}, {"error_l2", number_or_null(pt.error)}, {"max_rank", pt.max_rank},
                           {"status", pt.status}});
        j["points"] = pts;
        {
            auto os = open_text(cfg.out_dir + "/convergence.json");
            os << j.dump(2) << '\n';
        }
        out << j.dump() << '\n';
        if (!st.all_ok()) {
            err << "numerical failure: at least one step size diverged\n";
            return static_cast<int>(kExitNumerical);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_proptest(const std::string& suite, std::uint64_t seed, long cases, std::ostream& out, std::ostream& err) {
    return exit_code_of(err, [&] {
        std::vector<std::string> names;
        if (suite == "all") names = suite_names();
        else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end()) names = {suite};
        else throw ConfigError("unknown suite '" + suite + "'");
        bool ok = true;
        for (const auto& name : names) {
            const SuiteReport rep = run_suite(name, seed, cases);
            json j;
            j["suite"] = rep.name;
            j["seed"] = seed;
            j["cases"] = rep.cases;
            j["failures"] = rep.failures;
            j["passed"] = rep.passed();
            json m = json::object();
            for (const auto& [k, v] : rep.metrics) m[k] = number_or_null(v);
            j["metrics"] = m;
            j["notes"] = rep.failure_notes;
            out << j.dump() << '\n';
            ok = ok && rep.passed();
        }
        return ok ? static_cast<int>(kExitOk) : static_cast<int>(kExitFailed);
    });
}

int cmd_truncate(const TruncateRequest& req, std::ostream& out, std::ostream& err) {
    return exit_code_of(err, [&] {
        const int modes = (req.eps ? 1 : 0) + (req.rel_eps ? 1 : 0) + (req.rank ? 1 : 0);
        if (modes != 1) throw ConfigError("give exactly one of --eps, --rel-eps, --rank");
        char magic[8] = {};
        {
            std::ifstream is(req.input, std::ios::binary);
            if (!is) throw ConfigError("cannot open '" + req.input + "'");
            is.read(magic, 8);
        }
        const bool is_ht = std::string(magic, 8) == "HTSTHT01";
        HTensor h;
        DenseTensor dense;
        double norm = 0.0;
        if (is_ht) {
            h = load_ht(req.input);
            norm = ht_norm(h);
        } else {
            dense = load_dense(req.input);
            norm = dense.norm();
        }
        TruncationControl ctrl = req.rank ? TruncationControl::fixed_rank(*req.rank)
                                          : TruncationControl::tolerance(req.eps ? *req.eps : *req.rel_eps * norm);
        const Truncated tr = is_ht ? ht_truncate(h, ctrl) : ht_from_dense(dense, make_tree(req.tree, dense.order()), ctrl);
        save_ht(req.output, tr.tensor);
        json j;
        j["input_format"] = is_ht ? "ht" : "dense";
        j["input_bytes"] = is_ht ? serialized_size(h) : serialized_size(dense);
        j["output_bytes"] = serialized_size(tr.tensor);
        j["ranks"] = tr.tensor.ranks();
        j["error_estimate"] = tr.error_estimate;
        j["norm"] = norm;
        out << j.dump() << '\n';
        return static_cast<int>(kExitOk);
    });
}

}  // namespace htstep
