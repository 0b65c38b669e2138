#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <type_traits>
#include <utility>
#include <span>
#include <vector>

#include "gencalc/defaults.hpp"

namespace gencalc {

struct QuadratureOptions {
    double abs_tol = defaults::quad_abs_tol;
    double rel_tol = defaults::quad_rel_tol;
    int max_depth = defaults::quad_max_depth;
    int max_intervals = defaults::quad_max_intervals;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    double floor;  // roundoff floor 50·eps·∫|f| of this segment
    int depth;
    bool operator<(const Segment& o) const { return error < o.error; }
};

// An integrand returns either a value or a (value, magnitude) pair; the
// magnitude is the size of the terms that produced the value and sets the
// roundoff floor when the value itself comes out of a cancellation.
template <class F>
std::pair<double, double> sample(F& f, double x) {
    if constexpr (std::is_same_v<std::decay_t<std::invoke_result_t<F&, double>>, std::pair<double, double>>) {
        const auto p = f(x);
        return {p.first, std::max(std::abs(p.first), p.second)};
    } else {
        const double v = f(x);
        return {v, std::abs(v)};
    }
}

template <class F>
Segment gk15(F& f, double a, double b, int depth) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const auto [fc, mc] = sample(f, center);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    double resabs = mc * kWgk[7];
    double fv1[7], fv2[7];
    for (int j = 0; j < 3; ++j) {
        const int jt = 2 * j + 1;
        const double dx = half * kXgk[jt];
        const auto [f1, m1] = sample(f, center - dx);
        const auto [f2, m2] = sample(f, center + dx);
        fv1[jt] = f1;
        fv2[jt] = f2;
        resg += kWg[j] * (f1 + f2);
        resk += kWgk[jt] * (f1 + f2);
        resabs += kWgk[jt] * (m1 + m2);
    }
    for (int j = 0; j < 4; ++j) {
        const int jt = 2 * j;
        const double dx = half * kXgk[jt];
        const auto [f1, m1] = sample(f, center - dx);
        const auto [f2, m2] = sample(f, center + dx);
        fv1[jt] = f1;
        fv2[jt] = f2;
        resk += kWgk[jt] * (f1 + f2);
        resabs += kWgk[jt] * (m1 + m2);
    }
    const double mean = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    const double value = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    if (resabs > std::numeric_limits<double>::min() / (50.0 * std::numeric_limits<double>::epsilon()))
        err = std::max(round, err);
    return {a, b, value, err, round, depth};
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of f over [a, b].
///
/// The interval is first split at every breakpoint inside (a, b); afterwards the
/// segment with the largest error estimate is bisected until the summed error
/// is below max(abs_tol, rel_tol·|I|, 50·eps·∫|f|). A segment that would need refining past
/// the depth/interval caps or below representable width makes `converged`
/// false. Segments whose estimate is at the roundoff floor (50·eps·∫|f|), or
/// whose bisection changes the value only at that level without reducing the
/// estimate, count as converged.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                           std::span<const double> breakpoints = {}) {
    QuadratureResult out;
    if (a == b) return out;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    long evals = 0;
    auto counted = [&](double x) {
        ++evals;
        return f(x);
    };  // forwards a (value, magnitude) pair when f returns one

    std::vector<double> cuts{a};
    for (double p : breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Max-heap on error of the segments still being refined; `done` holds
    // frozen ones.
    std::vector<detail::Segment> heap, done;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) heap.push_back(detail::gk15(counted, cuts[i], cuts[i + 1], 0));
    std::make_heap(heap.begin(), heap.end());
    int intervals = static_cast<int>(heap.size());

    auto freeze = [&](const detail::Segment& s) { done.push_back(s); };
    // Exact re-summation; incremental updates drift by eps·max|value|.
    // The roundoff floor of the whole integral also bounds the attainable
    // tolerance (cancelling integrands with a tiny result).
    double floor_total = 0.0;
    auto sums = [&] {
        double v = 0.0, e = 0.0;
        floor_total = 0.0;
        for (const auto& s : heap) {
            v += s.value;
            e += s.error;
            floor_total += s.floor;
        }
        for (const auto& s : done) {
            v += s.value;
            floor_total += s.floor;
        }
        return std::pair{v, e};
    };
    auto [total, active_err] = sums();
    auto target = [&] { return std::max({opts.abs_tol, opts.rel_tol * std::abs(total), floor_total}); };
    while (!heap.empty()) {
        if (active_err <= 100.0 * target()) {
            std::tie(total, active_err) = sums();
            if (active_err <= target()) break;
        }
        std::pop_heap(heap.begin(), heap.end());
        const auto s = heap.back();
        heap.pop_back();
        active_err -= s.error;
        const double width = s.b - s.a;
        const double mid = 0.5 * (s.a + s.b);
        if (s.error <= s.floor) {
            freeze(s);  // already at the roundoff floor
            continue;
        }
        if (s.depth >= opts.max_depth || intervals >= opts.max_intervals || mid <= s.a || mid >= s.b ||
            width < 1e3 * std::numeric_limits<double>::epsilon() * std::max(std::abs(s.a), std::abs(s.b))) {
            freeze(s);
            out.converged = false;
            continue;
        }
        auto l = detail::gk15(counted, s.a, mid, s.depth + 1);
        auto r = detail::gk15(counted, mid, s.b, s.depth + 1);
        ++intervals;
        total += l.value + r.value - s.value;
        if (std::abs(l.value + r.value - s.value) <= 2.0 * (l.floor + r.floor) && l.error + r.error >= 0.5 * s.error) {
            // Bisection moved the value only at roundoff level and did not
            // shrink the estimate: the estimate itself is roundoff.
            freeze(l);
            freeze(r);
            continue;
        }
        for (const auto& c : {l, r}) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end());
            active_err += c.error;
        }
    }
    double sum = 0.0, err = 0.0;
    for (const auto& s : heap) {
        sum += s.value;
        err += s.error;
    }
    for (const auto& s : done) {
        sum += s.value;
        err += s.error;
    }
    out.value = sign * sum;
    out.error = err;
    out.evaluations = evals;
    return out;
}

/// Value of `r`, or QuadratureError naming `context` when it did not converge.
double require_converged(const QuadratureResult& r, const char* context);

}  // namespace gencalc
