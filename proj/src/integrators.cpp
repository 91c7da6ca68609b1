#include "htstep/integrators.hpp"

#include "htstep/errors.hpp"
#include "htstep/tensor_io.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>

namespace htstep {

namespace {

Truncated maybe_truncate(HTensor h, const std::optional<TruncationControl>& ctrl) {
    if (!ctrl) return {std::move(h), 0.0};
    return ht_truncate(h, *ctrl);
}

std::optional<TruncationControl> gamma_control(const StepControls& c, std::size_t j) {
    return j < c.gamma.size() ? c.gamma[j] : std::nullopt;
}

// A past state together with its truncated right-hand sides, keyed by truncation.
struct HistoryEntry {
    HTensor state;
    std::map<std::int64_t, Truncated> slopes;

    const Truncated& slope(const KronSumOperator& op, const std::optional<TruncationControl>& ctrl) {
        std::int64_t key = -1;
        if (ctrl) {
            if (ctrl->kind() != TruncationControl::Kind::Tolerance)
                return slopes.insert_or_assign(-2, maybe_truncate(apply_ht(op, state), ctrl)).first->second;
            key = std::bit_cast<std::int64_t>(ctrl->eps());
        }
        auto it = slopes.find(key);
        if (it == slopes.end()) it = slopes.emplace(key, maybe_truncate(apply_ht(op, state), ctrl)).first;
        return it->second;
    }
};

StepResult ab_from_history(std::deque<HistoryEntry>& history, const KronSumOperator& op, double dt,
                           const StepControls& c, const std::vector<double>& weights) {
    if (history.size() < weights.size())
        throw InputError("Adams-Bashforth step needs " + std::to_string(weights.size()) + " past states");
    StepResult out;
    HTensor combo;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const Truncated& s = history[j].slope(op, gamma_control(c, j));
        out.err_gamma.push_back(s.error_estimate);
        combo = (j == 0) ? s.tensor.scaled(weights[0]) : ht_linear_combine(1.0, combo, weights[j], s.tensor);
    }
    Truncated inc = maybe_truncate(std::move(combo), c.beta);
    out.err_beta = inc.error_estimate;
    Truncated next = maybe_truncate(ht_linear_combine(1.0, history.front().state, dt, inc.tensor), c.alpha);
    out.err_alpha = next.error_estimate;
    out.next = std::move(next.tensor);
    return out;
}

bool all_finite(const HTensor& h) {
    for (const auto& f : h.factors())
        if (!f.allFinite()) return false;
    return true;
}

}  // namespace

StepControls StepControls::adaptive(const Thresholds& th) {
    StepControls c;
    c.alpha = TruncationControl::tolerance(th.alpha);
    c.beta = TruncationControl::tolerance(th.beta);
    for (double g : th.gamma) c.gamma.emplace_back(TruncationControl::tolerance(g));
    return c;
}

StepControls StepControls::fixed_rank(const TruncationControl& caps) {
    StepControls c;
    c.alpha = caps;
    return c;
}

StepResult step_euler(const HTensor& f, const KronSumOperator& op, double dt, const StepControls& c) {
    StepResult out;
    Truncated inc = maybe_truncate(apply_ht(op, f), c.beta);
    out.err_beta = inc.error_estimate;
    Truncated next = maybe_truncate(ht_linear_combine(1.0, f, dt, inc.tensor), c.alpha);
    out.err_alpha = next.error_estimate;
    out.next = std::move(next.tensor);
    return out;
}

StepResult step_euler(const HTensor& f, const KronSumOperator& op, double dt, const Thresholds& th) {
    return step_euler(f, op, dt, StepControls::adaptive(th));
}

StepResult step_midpoint(const HTensor& f, const KronSumOperator& op, double dt, const StepControls& c) {
    StepResult out;
    Truncated stage = maybe_truncate(apply_ht(op, f), gamma_control(c, 0));
    out.err_gamma = {stage.error_estimate};
    const HTensor mid = ht_linear_combine(1.0, f, 0.5 * dt, stage.tensor);
    Truncated inc = maybe_truncate(apply_ht(op, mid), c.beta);
    out.err_beta = inc.error_estimate;
    Truncated next = maybe_truncate(ht_linear_combine(1.0, f, dt, inc.tensor), c.alpha);
    out.err_alpha = next.error_estimate;
    out.next = std::move(next.tensor);
    return out;
}

StepResult step_midpoint(const HTensor& f, const KronSumOperator& op, double dt, const Thresholds& th) {
    return step_midpoint(f, op, dt, StepControls::adaptive(th));
}

StepResult step_ab(const std::vector<HTensor>& history, const KronSumOperator& op, double dt, const StepControls& c,
                   const std::vector<double>& weights) {
    std::deque<HistoryEntry> entries;
    for (const auto& h : history) entries.push_back({h, {}});
    return ab_from_history(entries, op, dt, c, weights);
}

StepResult step_ab(const std::vector<HTensor>& history, const KronSumOperator& op, double dt, const Thresholds& th,
                   const std::vector<double>& weights) {
    return step_ab(history, op, dt, StepControls::adaptive(th), weights);
}

bool StepRecord::thresholds_respected() const {
    if (!(err_alpha <= eps_alpha) || !(err_beta <= eps_beta)) return false;
    for (std::size_t j = 0; j < err_gamma.size(); ++j)
        if (j >= eps_gamma.size() || !(err_gamma[j] <= eps_gamma[j])) return false;
    return true;
}

long step_count(double T, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw InputError("final time must be non-negative");
    const double ratio = T / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
        throw InputError("final time " + format_double(T) + " is not an integer multiple of dt " + format_double(dt));
    return static_cast<long>(n);
}

IntegrationResult integrate(const KronSumOperator& op, const HTensor& f0, const PeriodicGrid& grid,
                            const IntegrationOptions& opts) {
    const long n_steps = step_count(opts.T, opts.dt);
    const SchemeSpec& scheme = opts.scheme;
    const std::vector<double> weights = scheme.weights();
    const bool adaptive = opts.mode == RankMode::Adaptive;
    const bool multistep = scheme.kind() == SchemeSpec::Kind::AdamsBashforth && scheme.steps() > 1;

    Thresholds th, th_start;
    StepControls controls, start_controls;
    if (adaptive) {
        th = threshold_schedule(scheme, opts.dt, opts.policy);
        controls = StepControls::adaptive(th);
        if (multistep) {
            ThresholdPolicy sp = opts.startup_policy.value_or(ThresholdPolicy::midpoint(
                opts.policy.A, opts.policy.B, opts.policy.G.empty() ? 0.0 : opts.policy.G.front()));
            th_start = threshold_schedule(SchemeSpec::midpoint(), opts.dt, sp);
            start_controls = StepControls::adaptive(th_start);
        }
    } else {
        if (!opts.rank_caps) throw InputError("fixed-rank integration needs rank caps");
        controls = StepControls::fixed_rank(*opts.rank_caps);
        start_controls = controls;
    }

    IntegrationResult result;
    result.initial_mass = quad_integral(f0, grid);
    std::deque<HistoryEntry> history{{f0, {}}};
    long k0 = 0;
    if (!opts.restart_path.empty()) {
        Checkpoint cp = load_checkpoint(opts.restart_path);
        if (cp.states.empty() || cp.step > n_steps) throw InputError("checkpoint does not fit this run");
        k0 = cp.step;
        history.clear();
        for (auto& s : cp.states) history.push_back({std::move(s), {}});
    }
    const std::size_t keep = static_cast<std::size_t>(std::max(1, scheme.steps()));

    for (long k = k0 + 1; k <= n_steps; ++k) {
        const auto start = std::chrono::steady_clock::now();
        StepRecord rec;
        rec.k = k;
        rec.t = static_cast<double>(k) * opts.dt;
        const HTensor& f = history.front().state;
        StepResult step;
        const Thresholds* used = &th;
        switch (scheme.kind()) {
            case SchemeSpec::Kind::Euler:
                step = step_euler(f, op, opts.dt, controls);
                break;
            case SchemeSpec::Kind::Midpoint:
                step = step_midpoint(f, op, opts.dt, controls);
                break;
            case SchemeSpec::Kind::AdamsBashforth:
                if (history.size() < keep) {
                    step = step_midpoint(f, op, opts.dt, start_controls);
                    used = &th_start;
                    rec.startup = true;
                } else {
                    step = ab_from_history(history, op, opts.dt, controls, weights);
                }
                break;
        }
        if (!all_finite(step.next))
            throw NumericalError("non-finite values in the solution at step " + std::to_string(k) +
                                 " (t = " + format_double(rec.t) + ")");

        history.push_front({std::move(step.next), {}});
        while (history.size() > keep) history.pop_back();
        const HTensor& next = history.front().state;

        rec.ranks = next.ranks();
        rec.max_rank = next.max_rank();
        if (adaptive) {
            rec.eps_alpha = used->alpha;
            rec.eps_beta = used->beta;
            rec.eps_gamma = used->gamma;
        }
        rec.err_alpha = step.err_alpha;
        rec.err_beta = step.err_beta;
        rec.err_gamma = step.err_gamma;
        rec.mass = quad_integral(next, grid);
        if (!std::isfinite(rec.mass)) throw NumericalError("non-finite mass at step " + std::to_string(k));
        if (opts.error_probe) rec.err_l2 = opts.error_probe(k, rec.t, next);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        rec.wall_ms = opts.timing ? ms : 0.0;
        if (opts.on_step) opts.on_step(rec, next);
        result.records.push_back(std::move(rec));

        if (opts.checkpoint_stride > 0 && !opts.checkpoint_path.empty() && k % opts.checkpoint_stride == 0) {
            Checkpoint cp{k, {}};
            for (const auto& e : history) cp.states.push_back(e.state);
            save_checkpoint(opts.checkpoint_path, cp);
        }
    }
    result.final_state = history.front().state;
    result.steps = n_steps;
    return result;
}

namespace {

template <typename T, typename Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
    return s;
}

}  // namespace

void write_step_csv(std::ostream& os, const std::vector<StepRecord>& records) {
    os << "# htstep step-records v1\n";
    os << "k,t,max_rank,ranks,eps_alpha,eps_beta,eps_gamma,trunc_err_est,mass,err_l2,wall_ms\n";
    for (const auto& r : records) {
        std::vector<Index> non_root(r.ranks.begin() + (r.ranks.empty() ? 0 : 1), r.ranks.end());
        os << r.k << ',' << format_double(r.t) << ',' << r.max_rank << ','
           << join(non_root, [](Index v) { return std::to_string(v); }) << ',' << format_double(r.eps_alpha) << ','
           << format_double(r.eps_beta) << ',' << join(r.eps_gamma, format_double) << ','
           << format_double(r.trunc_err_est()) << ',' << format_double(r.mass) << ','
           << (r.err_l2 ? format_double(*r.err_l2) : std::string()) << ',' << format_double(r.wall_ms) << '\n';
    }
}

}  // namespace htstep
