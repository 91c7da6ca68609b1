#pragma once

#include "htstep/dense_tensor.hpp"
#include "htstep/errors.hpp"
#include "htstep/kron_operator.hpp"
#include "htstep/spectral.hpp"

#include <functional>
#include <vector>

namespace htstep {

/// Classical fourth-order Runge-Kutta step for f' = N f.
DenseTensor rk4_step(const KronSumOperator& op, const DenseTensor& f, double dt);

struct SteadyState {
    DenseTensor state;
    double time = 0.0;
    long steps = 0;
    /// L2 norm of N f at every visited step, starting with the initial state.
    std::vector<double> residuals;
};

class SteadyStateTimeout : public NumericalError {
public:
    SteadyStateTimeout(long steps, double last_residual);
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

/// Integrates with RK4 until ||N f||_{L2} < tol; throws SteadyStateTimeout after max_steps.
SteadyState run_to_steady(const KronSumOperator& op, const DenseTensor& f0, const PeriodicGrid& grid, double dt,
                          double tol, long max_steps);

/// RK4 over `steps` steps; `observer(k, t, f)` is called for k = 0 and then every `stride` steps.
DenseTensor integrate_reference(const KronSumOperator& op, const DenseTensor& f0, double dt, long steps,
                                long stride = 0,
                                const std::function<void(long, double, const DenseTensor&)>& observer = {});

}  // namespace htstep
