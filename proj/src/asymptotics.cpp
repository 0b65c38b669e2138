#include "gencalc/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

#include "gencalc/error.hpp"
#include "gencalc/mollifier.hpp"
#include "gencalc/parallel.hpp"

namespace gencalc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxSamplePoints = 5'000'000;

std::string point_string(std::span<const double> x) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = 0.5 * (a + b);
        return v;
    }
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    v.back() = b;
    return v;
}

struct Evaluator {
    const NetExpr& d;
    double eps;

    // |d_ε(x)|, +inf on overflow; other failures gain (ε, x) context.
    double operator()(std::span<const double> x) const {
        try {
            return std::abs(eval(d, eps, x));
        } catch (const EvaluationError& e) {
            if (e.is_overflow()) return kInf;
            throw EvaluationError(e.message() + " (eps=" + std::to_string(eps) + ", x=" + point_string(x) + ")",
                                  e.path());
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (eps=" + std::to_string(eps) + ")");
        }
    }
};

SweepSample sweep_one(const NetExpr& d, const CompactBox& K, double eps) {
    const int dim = K.dimension();
    Evaluator f{d, eps};
    std::vector<std::vector<double>> lists(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
        const auto& iv = K.axes[static_cast<std::size_t>(a)];
        // Axes the net ignores collapse to one point.
        lists[static_cast<std::size_t>(a)] =
            depends_on_axis(d, a) ? K.axis_points(a) : std::vector<double>{0.5 * (iv.lo + iv.hi)};
    }
    for (const auto& ft : features(d, eps)) {
        if (ft.axis >= dim) continue;
        auto& l = lists[static_cast<std::size_t>(ft.axis)];
        const auto& iv = K.axes[static_cast<std::size_t>(ft.axis)];
        for (double s : linspace(-1.0, 1.0, defaults::feature_stencil)) {
            const double p = ft.center + ft.half_width * s;
            if (p >= iv.lo && p <= iv.hi) l.push_back(p);
        }
    }
    std::size_t total = 1;
    for (auto& l : lists) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        total *= l.size();
    }
    if (total > kMaxSamplePoints) throw ArgumentError("sampling grid too large; lower the box resolution");

    SweepSample out{eps, 0.0, {}};
    std::vector<double> x(static_cast<std::size_t>(dim));
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    std::vector<double> best(static_cast<std::size_t>(dim));
    for (std::size_t n = 0; n < total; ++n) {
        for (int a = 0; a < dim; ++a) x[static_cast<std::size_t>(a)] = lists[static_cast<std::size_t>(a)][idx[static_cast<std::size_t>(a)]];
        const double v = f(x);
        if (v > out.sup || (n == 0)) {
            out.sup = v;
            best = x;
            if (std::isinf(v)) {
                out.argmax = best;
                return out;
            }
        }
        for (int a = dim - 1; a >= 0; --a) {
            auto& i = idx[static_cast<std::size_t>(a)];
            if (++i < lists[static_cast<std::size_t>(a)].size()) break;
            i = 0;
        }
    }
    // One coordinate-wise refinement pass around the maximiser.
    for (int a = 0; a < dim; ++a) {
        const auto& l = lists[static_cast<std::size_t>(a)];
        const double p = best[static_cast<std::size_t>(a)];
        auto it = std::lower_bound(l.begin(), l.end(), p);
        const double left = it == l.begin() ? p : *std::prev(it);
        const double right = (it == l.end() || std::next(it) == l.end()) ? p : *std::next(it);
        if (left == right) continue;
        x = best;
        for (double t : linspace(left, right, defaults::refine_points)) {
            x[static_cast<std::size_t>(a)] = t;
            const double v = f(x);
            if (v > out.sup) {
                out.sup = v;
                best = x;
                if (std::isinf(v)) break;
            }
        }
    }
    out.argmax = best;
    return out;
}

int total_order(const std::vector<int>& alpha) {
    int t = 0;
    for (int a : alpha) t += a;
    return t;
}

void check_box(const NetExpr& e, const CompactBox& K) {
    if (K.dimension() < e.node().dimension)
        throw ArgumentError("box has " + std::to_string(K.dimension()) + " axes but the net uses " +
                            std::to_string(e.node().dimension));
    const auto& dom = e.domain();
    for (std::size_t i = 0; i < dom.size() && i < K.axes.size(); ++i)
        if (!(K.axes[i].lo > dom[i].lo && K.axes[i].hi < dom[i].hi))
            throw ArgumentError("box axis " + std::to_string(i) + " is not inside the net domain");
}

void kernel_order_warnings(const NetExpr& e, int m_max, std::vector<std::string>& out) {
    std::vector<const Node*> stack{&e.node()};
    int lowest = std::numeric_limits<int>::max();
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        for (const auto& c : n->children) stack.push_back(c.get());
        if (n->kind == NodeKind::embedded) lowest = std::min(lowest, n->kernel->base().moment_order());
    }
    if (lowest != std::numeric_limits<int>::max() && lowest < m_max)
        out.push_back("embedding mollifier has moment order " + std::to_string(lowest) + " < m_max = " +
                      std::to_string(m_max) + "; negligibility of embedding differences is only O(eps^(q+1))");
}

}  // namespace

CompactBox::CompactBox(std::vector<Interval> a, int res) : axes(std::move(a)), resolution(res) {
    if (axes.empty()) throw ArgumentError("box needs at least one axis");
    if (resolution < 2) throw ArgumentError("box resolution must be at least 2");
    for (const auto& iv : axes)
        if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw ArgumentError("box intervals must have nonempty interior");
}

CompactBox CompactBox::cube(int dim, double lo, double hi, int res) {
    return CompactBox(std::vector<Interval>(static_cast<std::size_t>(dim), Interval{lo, hi}), res);
}

CompactBox CompactBox::parse(const std::string& text, int res) {
    static const std::regex item(R"(\s*\[\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\]\s*)");
    std::vector<Interval> axes;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::smatch m;
        const std::string rest = text.substr(pos);
        if (!std::regex_search(rest, m, item, std::regex_constants::match_continuous))
            throw ArgumentError("cannot parse box '" + text + "'; expected [lo,hi]x[lo,hi]...");
        try {
            axes.push_back({std::stod(m[1]), std::stod(m[2])});
        } catch (const std::exception&) {
            throw ArgumentError("cannot parse box bounds in '" + text + "'");
        }
        pos += static_cast<std::size_t>(m.length(0));
        if (pos < text.size()) {
            if (text[pos] != 'x' && text[pos] != '*') throw ArgumentError("expected 'x' between box intervals");
            ++pos;
        }
    }
    return CompactBox(std::move(axes), res);
}

std::vector<double> CompactBox::axis_points(int axis) const {
    const auto& iv = axes.at(static_cast<std::size_t>(axis));
    return linspace(iv.lo, iv.hi, resolution);
}

std::string CompactBox::to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < axes.size(); ++i) os << (i ? "x" : "") << "[" << axes[i].lo << "," << axes[i].hi << "]";
    return os.str();
}

EpsGrid::EpsGrid(double s, double r, int c) : start(s), ratio(r), count(c) {
    if (!(s > 0.0 && s <= 1.0)) throw ArgumentError("eps grid start must lie in (0, 1]");
    if (!(r > 0.0 && r < 1.0)) throw ArgumentError("eps grid ratio must lie in (0, 1)");
    if (c < 1) throw ArgumentError("eps grid needs at least one point");
}

EpsGrid EpsGrid::order_grid() {
    return EpsGrid(defaults::order_eps_start, defaults::order_eps_ratio, defaults::order_eps_count);
}

std::vector<double> EpsGrid::values() const {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = start * std::pow(ratio, k);
    return v;
}

std::vector<SweepSample> sup_sweep(const NetExpr& e, const CompactBox& K, const std::vector<int>& alpha,
                                   const EpsGrid& grid) {
    check_box(e, K);
    if (alpha.size() > K.axes.size()) throw ArgumentError("multiindex has more entries than the box has axes");
    for (int a : alpha)
        if (a < 0) throw ArgumentError("multiindex entries must be non-negative");
    if (total_order(alpha) > defaults::jet_order_cap)
        throw ArgumentError("derivative order exceeds the cap " + std::to_string(defaults::jet_order_cap));
    const NetExpr d = derive(e, alpha);
    const auto eps = grid.values();
    std::vector<SweepSample> out(eps.size());
    parallel_for(eps.size(), [&](std::size_t k) { out[k] = sweep_one(d, K, eps[k]); });
    return out;
}

OrderFit fit_order(const std::vector<double>& eps, const std::vector<double>& values, const FitOptions& opts) {
    if (eps.size() != values.size()) throw ArgumentError("fit_order: eps and value lists differ in length");
    std::vector<std::pair<double, double>> pts;
    bool any_above = false;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!std::isfinite(values[i])) continue;
        if (values[i] > opts.floor) {
            any_above = true;
            pts.emplace_back(std::log(eps[i]), std::log(values[i]));
        }
    }
    OrderFit fit;
    if (!any_above) {
        fit.exponent = kInf;
        fit.r2 = 1.0;
        return fit;
    }
    if (static_cast<int>(pts.size()) < opts.min_samples)
        throw InsufficientDataError("order fit needs " + std::to_string(opts.min_samples) + " usable samples, got " +
                                    std::to_string(pts.size()));
    if (static_cast<int>(pts.size()) > opts.window) pts.erase(pts.begin(), pts.end() - opts.window);
    const double n = static_cast<double>(pts.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0) throw InsufficientDataError("order fit needs distinct eps values");
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = y - (fit.intercept + fit.exponent * x);
        ssr += r * r;
    }
    // Residuals at rounding level count as a perfect fit (constant data).
    fit.r2 = (ssr <= 1e-18 * n || syy == 0.0) ? 1.0 : std::max(0.0, 1.0 - ssr / syy);
    fit.used = static_cast<int>(pts.size());
    return fit;
}

OrderFit fit_order(const std::vector<SweepSample>& samples, const FitOptions& opts) {
    std::vector<double> e, v;
    for (const auto& s : samples) {
        e.push_back(s.eps);
        v.push_back(s.sup);
    }
    return fit_order(e, v, opts);
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::moderate: return "Moderate";
        case Verdict::negligible: return "Negligible";
        case Verdict::not_moderate: return "NotModerate";
        case Verdict::not_negligible: return "NotNegligible";
        case Verdict::indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

double AsymptoticReport::min_exponent() const {
    double m = kInf;
    for (const auto& a : per_alpha) m = std::min(m, a.overflow ? -kInf : a.fit.exponent);
    return m;
}

std::string AsymptoticReport::verdict_label() const {
    switch (verdict) {
        case Verdict::moderate: return "Moderate(" + std::to_string(N) + ")";
        case Verdict::negligible: return "Negligible(" + std::to_string(m_max) + ")";
        default: return to_string(verdict);
    }
}

AsymptoticReport classify_moderate(const NetExpr& e, const CompactBox& K, int alpha_max, const EpsGrid& grid) {
    if (alpha_max < 0 || alpha_max > defaults::jet_order_cap)
        throw ArgumentError("alpha_max must lie in 0.." + std::to_string(defaults::jet_order_cap));
    AsymptoticReport r;
    r.test = "moderate";
    r.alpha_max = alpha_max;
    r.box = K;
    r.grid = grid;
    bool any_not = false, any_indet = false;
    int N = 0;
    const FitOptions opts{defaults::fit_window, defaults::fit_min_samples, defaults::noise_floor};
    for (const auto& alpha : multiindices(K.dimension(), alpha_max)) {
        AlphaReport a;
        a.alpha = alpha;
        a.samples = sup_sweep(e, K, alpha, grid);
        a.overflow = std::any_of(a.samples.begin(), a.samples.end(), [](const SweepSample& s) { return std::isinf(s.sup); });
        if (a.overflow) {
            a.fit.exponent = -kInf;
            a.fit.r2 = 0.0;
            a.status = "overflow";
            any_not = true;
        } else {
            try {
                a.fit = fit_order(a.samples, opts);
                if (std::isinf(a.fit.exponent)) {
                    a.status = "zero";
                } else if (a.fit.exponent < defaults::not_moderate_exponent) {
                    a.status = "super-polynomial";
                    any_not = true;
                } else if (a.fit.exponent >= -defaults::exponent_slack) {
                    a.status = "bounded";
                } else if (a.fit.r2 >= defaults::r2_threshold) {
                    a.status = "power law";
                    N = std::max(N, static_cast<int>(std::ceil(-a.fit.exponent - defaults::exponent_slack)));
                } else {
                    // Growth whose log-log slope keeps steepening is faster than any power.
                    std::vector<double> slopes;
                    for (std::size_t k = 1; k < a.samples.size(); ++k) {
                        const auto& p = a.samples[k - 1];
                        const auto& q = a.samples[k];
                        if (p.sup > opts.floor && q.sup > opts.floor)
                            slopes.push_back(std::log(q.sup / p.sup) / std::log(q.eps / p.eps));
                    }
                    const bool accelerating =
                        slopes.size() >= 3 &&
                        std::is_sorted(slopes.rbegin(), slopes.rend()) && slopes.back() < slopes.front() - 1.0;
                    a.status = accelerating ? "accelerating growth" : "poor fit";
                    (accelerating ? any_not : any_indet) = true;
                }
            } catch (const InsufficientDataError& ex) {
                a.status = std::string("insufficient data: ") + ex.what();
                any_indet = true;
            }
        }
        r.per_alpha.push_back(std::move(a));
    }
    if (any_not) {
        r.verdict = Verdict::not_moderate;
    } else if (any_indet) {
        r.verdict = Verdict::indeterminate;
    } else {
        r.verdict = Verdict::moderate;
        r.N = N;
    }
    return r;
}

AsymptoticReport classify_negligible(const NetExpr& e, const CompactBox& K, int alpha_max, int m_max,
                                     const EpsGrid& grid) {
    if (alpha_max < 0 || alpha_max > defaults::jet_order_cap)
        throw ArgumentError("alpha_max must lie in 0.." + std::to_string(defaults::jet_order_cap));
    if (m_max < 1) throw ArgumentError("m_max must be positive");
    AsymptoticReport r;
    r.test = "negligible";
    r.alpha_max = alpha_max;
    r.m_max = m_max;
    r.box = K;
    r.grid = grid;
    kernel_order_warnings(e, m_max, r.warnings);
    bool all_neg = true, any_not = false;
    const FitOptions opts{defaults::fit_window, defaults::fit_min_samples, defaults::noise_floor};
    for (const auto& alpha : multiindices(K.dimension(), alpha_max)) {
        AlphaReport a;
        a.alpha = alpha;
        a.samples = sup_sweep(e, K, alpha, grid);
        a.overflow = std::any_of(a.samples.begin(), a.samples.end(), [](const SweepSample& s) { return std::isinf(s.sup); });
        if (a.overflow) {
            a.fit.exponent = -kInf;
            a.fit.r2 = 0.0;
            a.status = "overflow";
            any_not = true;
            all_neg = false;
        } else {
            try {
                a.fit = fit_order(a.samples, opts);
                if (std::isinf(a.fit.exponent)) {
                    a.status = "below noise floor";
                } else if (a.fit.exponent >= m_max - defaults::exponent_slack) {
                    a.status = "decays at tested order";
                } else if (a.fit.exponent < 1.0 - defaults::exponent_slack && a.fit.r2 >= defaults::r2_threshold) {
                    a.status = "does not decay";
                    any_not = true;
                    all_neg = false;
                } else {
                    a.status = "undecided";
                    all_neg = false;
                }
            } catch (const InsufficientDataError& ex) {
                a.status = std::string("insufficient data: ") + ex.what();
                all_neg = false;
            }
        }
        r.per_alpha.push_back(std::move(a));
    }
    r.verdict = any_not ? Verdict::not_negligible : (all_neg ? Verdict::negligible : Verdict::indeterminate);
    return r;
}

AsymptoticReport equal_in_algebra(const NetExpr& u, const NetExpr& v, const CompactBox& K, int alpha_max, int m_max,
                                  const EpsGrid& grid) {
    const int du = u.node().dimension, dv = v.node().dimension;
    if (du > 0 && dv > 0 && du != dv) throw ArgumentError("nets differ in dimension");
    return classify_negligible(u - v, K, alpha_max, m_max, grid);
}

namespace {

nlohmann::json number_or_sentinel(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "+inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const AsymptoticReport& r) {
    nlohmann::json j;
    j["schema"] = "gencalc.asymptotic_report/1";
    j["test"] = r.test;
    j["verdict"] = to_string(r.verdict);
    j["verdict_label"] = r.verdict_label();
    if (r.verdict == Verdict::moderate) j["N"] = r.N;
    if (r.m_max >= 0) j["m_max"] = r.m_max;
    j["alpha_max"] = r.alpha_max;
    j["box"] = r.box.to_string();
    j["box_resolution"] = r.box.resolution;
    j["eps_grid"] = {{"start", r.grid.start}, {"ratio", r.grid.ratio}, {"count", r.grid.count}};
    j["min_exponent"] = number_or_sentinel(r.min_exponent());
    j["per_alpha"] = nlohmann::json::array();
    for (const auto& a : r.per_alpha) {
        nlohmann::json ja;
        ja["alpha"] = a.alpha;
        ja["exponent"] = number_or_sentinel(a.fit.exponent);
        ja["intercept"] = a.fit.intercept;
        ja["r2"] = a.fit.r2;
        ja["used_samples"] = a.fit.used;
        ja["status"] = a.status;
        std::ostringstream csv;
        csv.precision(17);
        csv << "eps,sup\n";
        ja["samples"] = nlohmann::json::array();
        for (const auto& s : a.samples) {
            ja["samples"].push_back({{"eps", s.eps}, {"sup", number_or_sentinel(s.sup)}, {"argmax", s.argmax}});
            csv << s.eps << "," << s.sup << "\n";
        }
        ja["samples_csv"] = csv.str();
        j["per_alpha"].push_back(std::move(ja));
    }
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace gencalc
