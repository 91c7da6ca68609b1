#include "htstep/reference_solver.hpp"

#include <cmath>
#include <string>

namespace htstep {

namespace {

void require_finite(const DenseTensor& f, long step) {
    if (!f.data().allFinite())
        throw NumericalError("reference solution became non-finite at step " + std::to_string(step));
}

DenseTensor rk4_from_slope(const KronSumOperator& op, const DenseTensor& f, const DenseTensor& k1, double dt) {
    const DenseTensor k2 = apply_dense(op, dense_linear_combine(1.0, f, 0.5 * dt, k1));
    const DenseTensor k3 = apply_dense(op, dense_linear_combine(1.0, f, 0.5 * dt, k2));
    const DenseTensor k4 = apply_dense(op, dense_linear_combine(1.0, f, dt, k3));
    return DenseTensor(f.dims(), f.data() + (dt / 6.0) * (k1.data() + 2.0 * k2.data() + 2.0 * k3.data() + k4.data()));
}

}  // namespace

DenseTensor rk4_step(const KronSumOperator& op, const DenseTensor& f, double dt) {
    return rk4_from_slope(op, f, apply_dense(op, f), dt);
}

SteadyStateTimeout::SteadyStateTimeout(long steps, double last_residual)
    : NumericalError("steady state not reached after " + std::to_string(steps) + " steps; last residual " +
                     std::to_string(last_residual)),
      last_residual_(last_residual) {}

SteadyState run_to_steady(const KronSumOperator& op, const DenseTensor& f0, const PeriodicGrid& grid, double dt,
                          double tol, long max_steps) {
    if (!(tol > 0.0)) throw InputError("steady-state tolerance must be positive");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    SteadyState out{f0, 0.0, 0, {}};
    for (long k = 0;; ++k) {
        const DenseTensor slope = apply_dense(op, out.state);
        const double res = l2_norm(slope, grid);
        out.residuals.push_back(res);
        if (res < tol) {
            out.steps = k;
            out.time = static_cast<double>(k) * dt;
            return out;
        }
        if (k >= max_steps) throw SteadyStateTimeout(k, res);
        out.state = rk4_from_slope(op, out.state, slope, dt);
        require_finite(out.state, k + 1);
    }
}

DenseTensor integrate_reference(const KronSumOperator& op, const DenseTensor& f0, double dt, long steps, long stride,
                                const std::function<void(long, double, const DenseTensor&)>& observer) {
    DenseTensor f = f0;
    if (observer) observer(0, 0.0, f);
    for (long k = 1; k <= steps; ++k) {
        f = rk4_step(op, f, dt);
        require_finite(f, k);
        if (observer && stride > 0 && (k % stride == 0 || k == steps)) observer(k, static_cast<double>(k) * dt, f);
    }
    return f;
}

}  // namespace htstep
