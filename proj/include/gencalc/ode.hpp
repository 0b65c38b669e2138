#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gencalc/defaults.hpp"

namespace gencalc {

struct OdeOptions {
    double rel_tol = defaults::ode_rel_tol;
    double abs_tol = defaults::ode_abs_tol;
    double min_step = defaults::min_step;
    double blowup_norm = defaults::blowup_norm;
    long max_steps = 2'000'000;
    /// Step-size cap as a function of t (none when empty).
    std::function<double(double)> max_step;
    /// Points the integrator must land on exactly (e.g. pulse window edges).
    std::vector<double> stops;
};

enum class OdeStatus { completed, blowup, step_collapse, step_limit, non_finite };
const char* to_string(OdeStatus s);

struct OdeSolution {
    std::vector<double> t;
    std::vector<std::vector<double>> y;  // one state per accepted step, starting with the initial one
    long steps = 0;
    long rejected = 0;
    double max_step_taken = 0.0;
    OdeStatus status = OdeStatus::completed;
};

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dydt)>;

/// Adaptive Dormand–Prince 5(4) integration of y' = f(t, y) from t0 to t1
/// (t1 > t0). Stops early with a status other than `completed` when the state
/// norm exceeds blowup_norm, the step falls below min_step, or the RHS turns
/// non-finite.
OdeSolution dopri45(const OdeRhs& f, double t0, std::vector<double> y0, double t1, const OdeOptions& opts = {});

}  // namespace gencalc
