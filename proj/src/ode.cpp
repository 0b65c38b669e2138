#include "gencalc/ode.hpp"

#include <algorithm>
#include <cmath>

#include "gencalc/error.hpp"

namespace gencalc {
namespace {

// Dormand–Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b − b̂ (fifth minus embedded fourth order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

bool finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

const char* to_string(OdeStatus s) {
    switch (s) {
        case OdeStatus::completed: return "completed";
        case OdeStatus::blowup: return "blowup";
        case OdeStatus::step_collapse: return "step_collapse";
        case OdeStatus::step_limit: return "step_limit";
        case OdeStatus::non_finite: return "non_finite";
    }
    return "unknown";
}

OdeSolution dopri45(const OdeRhs& f, double t0, std::vector<double> y0, double t1, const OdeOptions& opts) {
    if (!(t1 > t0)) throw ArgumentError("integration interval must have t1 > t0");
    if (!finite(y0)) throw ArgumentError("initial state must be finite");
    const std::size_t n = y0.size();
    OdeSolution sol;
    sol.t.push_back(t0);
    sol.y.push_back(y0);

    std::vector<double> stops;
    for (double s : opts.stops)
        if (s > t0 && s < t1) stops.push_back(s);
    stops.push_back(t1);
    std::sort(stops.begin(), stops.end());

    auto cap = [&](double t) {
        double h = t1 - t0;
        if (opts.max_step) h = std::min(h, opts.max_step(t));
        return h;
    };

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
    double t = t0;
    std::vector<double> y = std::move(y0);
    f(t, y, k1);
    if (!finite(k1)) {
        sol.status = OdeStatus::non_finite;
        return sol;
    }
    double h = std::min(cap(t), 1e-2 * (t1 - t0));
    std::size_t next_stop = 0;

    while (t < t1) {
        if (sol.steps + sol.rejected >= opts.max_steps) {
            sol.status = OdeStatus::step_limit;
            return sol;
        }
        while (stops[next_stop] <= t) ++next_stop;
        h = std::min(h, cap(t));
        bool hits_stop = false;
        if (t + h >= stops[next_stop]) {
            h = stops[next_stop] - t;
            hits_stop = true;
        }
        if (h < opts.min_step && !hits_stop) {
            sol.status = OdeStatus::step_collapse;
            return sol;
        }
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double tn = hits_stop ? stops[next_stop] : t + h;
        f(tn, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(tn, y5, k7);

        double err = 0.0;
        bool ok = finite(y5) && finite(k7);
        if (ok) {
            for (std::size_t i = 0; i < n; ++i) {
                const double d =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
                err += (d / sc) * (d / sc);
            }
            err = std::sqrt(err / static_cast<double>(n));
            ok = std::isfinite(err);
        }
        if (!ok) {
            // Treat a non-finite trial as a rejection; give up once the step is tiny.
            ++sol.rejected;
            h *= 0.2;
            if (h < opts.min_step) {
                sol.status = OdeStatus::non_finite;
                return sol;
            }
            continue;
        }
        if (err <= 1.0) {
            t = tn;
            y = y5;
            k1 = k7;  // first-same-as-last
            ++sol.steps;
            sol.max_step_taken = std::max(sol.max_step_taken, h);
            sol.t.push_back(t);
            sol.y.push_back(y);
            if (norm_inf(y) > opts.blowup_norm) {
                sol.status = OdeStatus::blowup;
                return sol;
            }
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            ++sol.rejected;
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (h < opts.min_step) {
                sol.status = OdeStatus::step_collapse;
                return sol;
            }
        }
    }
    return sol;
}

}  // namespace gencalc
