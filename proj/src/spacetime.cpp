#include "gencalc/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "gencalc/distribution.hpp"
#include "gencalc/embedding.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"
#include "gencalc/parallel.hpp"
#include "gencalc/quadrature.hpp"

namespace gencalc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t idx2(int n, int i, int j) { return static_cast<std::size_t>(i * n + j); }

RegularizedMetric brinkmann_shell(std::string name, const NetExpr& guu) {
    RegularizedMetric m;
    m.name = std::move(name);
    m.kind = MetricKind::brinkmann;
    m.labels = {"u", "v", "x", "y"};
    m.g.assign(16, NetExpr::constant(0.0));
    m.g[idx2(4, 0, 0)] = guu;
    m.g[idx2(4, 0, 1)] = m.g[idx2(4, 1, 0)] = NetExpr::constant(-0.5);
    m.g[idx2(4, 2, 2)] = m.g[idx2(4, 3, 3)] = NetExpr::constant(1.0);
    m.profile = NetExpr::constant(0.0);
    return m;
}

double support_radius(const TestFunction& phi) {
    const auto& f = phi.factor(0);
    return std::max(std::abs(f.lower()), std::abs(f.upper()));
}

// Laplace expansion along the first remaining row; zero entries are skipped.
NetExpr det_minor(const RegularizedMetric& m, std::vector<int> rows, std::vector<int> cols) {
    const int n = m.dimension();
    if (rows.size() == 1) return m.g[idx2(n, rows[0], cols[0])];
    const int r = rows[0];
    std::vector<int> sub_rows(rows.begin() + 1, rows.end());
    std::vector<NetExpr> terms;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const NetExpr& a = m.g[idx2(n, r, cols[c])];
        if (a.is_zero()) continue;
        std::vector<int> sub_cols = cols;
        sub_cols.erase(sub_cols.begin() + static_cast<long>(c));
        NetExpr t = a * det_minor(m, sub_rows, sub_cols);
        terms.push_back(c % 2 == 0 ? t : -t);
    }
    if (terms.empty()) return NetExpr::constant(0.0);
    return sum(terms);
}

std::vector<int> iota(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

std::string point_string(std::span<const double> x) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// Grid points of K, collapsing axes the expression ignores.
std::vector<std::vector<double>> sample_lists(const NetExpr& e, const CompactBox& K) {
    std::vector<std::vector<double>> lists;
    for (int a = 0; a < K.dimension(); ++a) {
        const auto& iv = K.axes[static_cast<std::size_t>(a)];
        lists.push_back(depends_on_axis(e, a) ? K.axis_points(a) : std::vector<double>{0.5 * (iv.lo + iv.hi)});
    }
    return lists;
}

template <class F>
void for_each_point(const std::vector<std::vector<double>>& lists, F&& f) {
    const std::size_t d = lists.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    while (true) {
        for (std::size_t a = 0; a < d; ++a) x[a] = lists[a][idx[a]];
        f(std::span<const double>(x));
        std::size_t a = d;
        while (a > 0) {
            --a;
            if (++idx[a] < lists[a].size()) break;
            idx[a] = 0;
            if (a == 0) return;
        }
        if (d == 0) return;
    }
}

std::string component_name(const RegularizedMetric& m, const char* prefix, int i, int j) {
    return std::string(prefix) + m.labels[static_cast<std::size_t>(i)] + m.labels[static_cast<std::size_t>(j)];
}

}  // namespace

NetExpr parse_profile(const std::string& text) {
    return parse_expression(text, {{"u", chart::u}, {"v", chart::v}, {"x", chart::x}, {"y", chart::y}});
}

RegularizedMetric build_brinkmann(const NetExpr& f, const StrictDeltaNet& rho) {
    if (rho.base().dimension() != 1) throw ArgumentError("the pulse must be a one-dimensional strict delta net");
    if (depends_on_epsilon(f)) throw ArgumentError("the profile must not depend on eps");
    if (depends_on_axis(f, chart::u) || depends_on_axis(f, chart::v))
        throw ArgumentError("the profile may depend on x and y only");
    const NetExpr pulse = scaled_kernel(rho.base().factor(0), chart::u);
    RegularizedMetric m = brinkmann_shell("brinkmann", f * pulse);
    m.profile = f;
    m.pulse = rho;
    m.pulse_radius = support_radius(rho.base());
    return m;
}

RegularizedMetric kink_metric(const TestFunction& phi) {
    if (phi.dimension() != 1) throw ArgumentError("kink metric needs a one-dimensional mollifier");
    const auto kernel = std::make_shared<const SmoothingKernelNet>(translation_kernel_net(phi));
    const NetExpr kink = embed_distribution(DistributionSpec::regular(abs(NetExpr::coordinate(0)), 1), kernel);
    RegularizedMetric m = brinkmann_shell("kink", 1.0 + kink);
    m.pulse = StrictDeltaNet(phi);
    m.pulse_radius = support_radius(phi);
    return m;
}

RegularizedMetric flat_metric() {
    auto m = brinkmann_shell("flat", NetExpr::constant(0.0));
    return m;
}

RegularizedMetric general_metric(std::vector<std::string> labels, std::vector<NetExpr> components, std::string name) {
    const int n = static_cast<int>(labels.size());
    if (n < 1 || n > 4) throw ArgumentError("metrics have 1 to 4 dimensions");
    if (components.size() != static_cast<std::size_t>(n * n))
        throw ArgumentError("expected " + std::to_string(n * n) + " metric components");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!structurally_equal(components[idx2(n, i, j)], components[idx2(n, j, i)]))
                throw ArgumentError("metric component (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") differs from its transpose");
    RegularizedMetric m;
    m.name = std::move(name);
    m.kind = MetricKind::general;
    m.labels = std::move(labels);
    m.g = std::move(components);
    // Share one expression per symmetric pair.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m.g[idx2(n, j, i)] = m.g[idx2(n, i, j)];
    m.profile = NetExpr::constant(0.0);
    m.signature = "general";
    return m;
}

NetExpr determinant(const RegularizedMetric& m) { return det_minor(m, iota(m.dimension()), iota(m.dimension())); }

std::vector<NetExpr> metric_inverse(const RegularizedMetric& m) {
    const int n = m.dimension();
    std::vector<NetExpr> inv(static_cast<std::size_t>(n * n), NetExpr::constant(0.0));
    if (m.kind == MetricKind::brinkmann) {
        inv[idx2(4, 0, 1)] = inv[idx2(4, 1, 0)] = NetExpr::constant(-2.0);
        inv[idx2(4, 1, 1)] = -4.0 * m.g[idx2(4, 0, 0)];
        inv[idx2(4, 2, 2)] = inv[idx2(4, 3, 3)] = NetExpr::constant(1.0);
        return inv;
    }
    const NetExpr det = determinant(m);
    if (det.is_zero()) throw DegeneracyError("metric determinant is identically zero");
    const NetExpr inv_det = det.is_constant() ? NetExpr::constant(1.0 / det.node().value) : NetExpr::constant(1.0) / det;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            // (g^{-1})_{ij} = (−1)^{i+j} M_{ji} / det
            std::vector<int> rows, cols;
            for (int r = 0; r < n; ++r)
                if (r != j) rows.push_back(r);
            for (int c = 0; c < n; ++c)
                if (c != i) cols.push_back(c);
            NetExpr minor = n == 1 ? NetExpr::constant(1.0) : det_minor(m, rows, cols);
            if ((i + j) % 2) minor = -minor;
            const NetExpr e = minor.is_zero() ? minor : minor * inv_det;
            inv[idx2(n, i, j)] = inv[idx2(n, j, i)] = e;
        }
    return inv;
}

NondegeneracyReport check_nondegenerate(const RegularizedMetric& m, const CompactBox& K, const EpsGrid& grid,
                                        double threshold) {
    if (K.dimension() != m.dimension()) throw ArgumentError("box dimension does not match the metric");
    const NetExpr det = determinant(m);
    const auto eps = grid.values();
    std::vector<NondegeneracyReport> per(eps.size());
    const auto lists = sample_lists(det, K);
    parallel_for(eps.size(), [&](std::size_t k) {
        NondegeneracyReport r{kInf, eps[k], {}};
        for_each_point(lists, [&](std::span<const double> x) {
            const double v = std::abs(eval(det, eps[k], x));
            if (v < r.min_abs_det) {
                r.min_abs_det = v;
                r.point_at_min.assign(x.begin(), x.end());
            }
        });
        per[k] = r;
    });
    NondegeneracyReport worst = per.front();
    for (const auto& r : per)
        if (r.min_abs_det < worst.min_abs_det) worst = r;
    if (!(worst.min_abs_det >= threshold)) {
        std::ostringstream os;
        os << "metric degenerate: |det g| = " << worst.min_abs_det << " at eps = " << worst.eps_at_min
           << ", point " << point_string(worst.point_at_min);
        throw DegeneracyError(os.str());
    }
    return worst;
}

ChristoffelField christoffel(const RegularizedMetric& m) {
    const int n = m.dimension();
    const auto inv = metric_inverse(m);
    // dg[(i·n + j)·n + a] = ∂_a g_ij
    std::vector<NetExpr> dg(static_cast<std::size_t>(n * n * n), NetExpr::constant(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int a = 0; a < n; ++a) {
                const NetExpr d = derive(m.g[idx2(n, i, j)], a);
                dg[static_cast<std::size_t>((i * n + j) * n + a)] = d;
                dg[static_cast<std::size_t>((j * n + i) * n + a)] = d;
            }
    auto D = [&](int i, int j, int a) -> const NetExpr& { return dg[static_cast<std::size_t>((i * n + j) * n + a)]; };
    ChristoffelField G;
    G.dim = n;
    G.gamma.assign(static_cast<std::size_t>(n * n * n), NetExpr::constant(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            // Γ_{m,ij} = ½(∂_i g_jm + ∂_j g_im − ∂_m g_ij)
            std::vector<NetExpr> lower(static_cast<std::size_t>(n));
            for (int mm = 0; mm < n; ++mm) {
                std::vector<NetExpr> t;
                for (const NetExpr* e : {&D(j, mm, i), &D(i, mm, j)})
                    if (!e->is_zero()) t.push_back(*e);
                if (!D(i, j, mm).is_zero()) t.push_back(-D(i, j, mm));
                lower[static_cast<std::size_t>(mm)] = t.empty() ? NetExpr::constant(0.0) : 0.5 * sum(t);
            }
            for (int k = 0; k < n; ++k) {
                std::vector<NetExpr> t;
                for (int mm = 0; mm < n; ++mm) {
                    const NetExpr& gi = inv[idx2(n, k, mm)];
                    const NetExpr& lo = lower[static_cast<std::size_t>(mm)];
                    if (gi.is_zero() || lo.is_zero()) continue;
                    t.push_back(gi * lo);
                }
                const NetExpr e = t.empty() ? NetExpr::constant(0.0) : sum(t);
                G.gamma[static_cast<std::size_t>((k * n + i) * n + j)] = e;
                G.gamma[static_cast<std::size_t>((k * n + j) * n + i)] = e;
            }
        }
    return G;
}

CurvatureField curvature(const RegularizedMetric& m, const ChristoffelField& G) {
    const int n = m.dimension();
    CurvatureField C;
    C.dim = n;
    const NetExpr zero = NetExpr::constant(0.0);
    C.riemann.assign(static_cast<std::size_t>(n * n * n * n), zero);
    auto R = [&](int i, int j, int k, int l) -> NetExpr& {
        return C.riemann[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    std::vector<NetExpr> t;
                    const NetExpr a = derive(G(i, k, j), l);
                    const NetExpr b = derive(G(i, l, j), k);
                    if (!a.is_zero()) t.push_back(a);
                    if (!b.is_zero()) t.push_back(-b);
                    for (int mm = 0; mm < n; ++mm) {
                        if (!G(i, l, mm).is_zero() && !G(mm, k, j).is_zero()) t.push_back(G(i, l, mm) * G(mm, k, j));
                        if (!G(i, k, mm).is_zero() && !G(mm, l, j).is_zero())
                            t.push_back(-(G(i, k, mm) * G(mm, l, j)));
                    }
                    if (t.empty()) continue;
                    const NetExpr e = sum(t);
                    R(i, j, k, l) = e;
                    R(i, j, l, k) = e.is_zero() ? e : -e;
                }
    C.ricci.assign(static_cast<std::size_t>(n * n), zero);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            std::vector<NetExpr> t;
            for (int i = 0; i < n; ++i)
                if (!R(i, j, k, i).is_zero()) t.push_back(R(i, j, k, i));
            if (!t.empty()) C.ricci[idx2(n, j, k)] = sum(t);
        }
    return C;
}

// ---------------------------------------------------------------------------

const char* to_string(GtVerdict v) {
    switch (v) {
        case GtVerdict::consistent: return "gt-regular-consistent";
        case GtVerdict::fails_boundedness: return "fails-boundedness";
        case GtVerdict::fails_l2: return "fails-L2";
        case GtVerdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

const ComponentSweep* GtRegularityReport::metric_sweep(const std::string& name) const {
    for (const auto& s : metric_sweeps)
        if (s.name == name) return &s;
    return nullptr;
}

const SquareIntegralRecord* GtRegularityReport::square_integral(const std::string& name) const {
    for (const auto& s : square_integrals)
        if (s.name == name) return &s;
    return nullptr;
}

namespace {

ComponentSweep sweep_component(const std::string& name, const NetExpr& e, const CompactBox& K, const EpsGrid& grid) {
    ComponentSweep s;
    s.name = name;
    if (!depends_on_epsilon(e)) {
        // ε-independent: sup does not change along the grid.
        s.constant = true;
        s.fit.exponent = 0.0;
        s.bounded = true;
        return s;
    }
    s.samples = sup_sweep(e, K, std::vector<int>(static_cast<std::size_t>(K.dimension()), 0), grid);
    try {
        s.fit = fit_order(s.samples);
    } catch (const InsufficientDataError&) {
        s.fit_ok = false;
        s.bounded = false;
        return s;
    }
    s.bounded = s.fit.exponent >= defaults::gt_bounded_exponent;
    s.fit_ok = s.bounded || s.fit.r2 >= defaults::r2_threshold;
    return s;
}

// ∫_K d² over the axes d depends on; the others contribute their length.
double square_integral(const NetExpr& d, const CompactBox& K, double eps) {
    const int n = K.dimension();
    std::vector<int> axes;
    double factor = 1.0;
    for (int a = 0; a < n; ++a) {
        const auto& iv = K.axes[static_cast<std::size_t>(a)];
        if (depends_on_axis(d, a))
            axes.push_back(a);
        else
            factor *= iv.hi - iv.lo;
    }
    std::vector<std::vector<double>> cuts(static_cast<std::size_t>(n));
    for (const auto& ft : features(d, eps)) {
        if (ft.axis >= n) continue;
        for (int i = 0; i <= 8; ++i)
            cuts[static_cast<std::size_t>(ft.axis)].push_back(ft.center + ft.half_width * (i / 4.0 - 1.0));
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        x[static_cast<std::size_t>(a)] = 0.5 * (K.axes[static_cast<std::size_t>(a)].lo + K.axes[static_cast<std::size_t>(a)].hi);
    if (axes.empty()) {
        const double v = eval(d, eps, x);
        return factor * v * v;
    }
    QuadratureOptions qo;
    qo.abs_tol = 1e-14;
    qo.rel_tol = 1e-8;
    std::function<double(std::size_t)> nested = [&](std::size_t level) -> double {
        const int a = axes[level];
        const auto& iv = K.axes[static_cast<std::size_t>(a)];
        auto integrand = [&](double t) {
            x[static_cast<std::size_t>(a)] = t;
            if (level + 1 < axes.size()) return nested(level + 1);
            const double v = eval(d, eps, x);
            return v * v;
        };
        return require_converged(integrate(integrand, iv.lo, iv.hi, qo, cuts[static_cast<std::size_t>(a)]),
                                 "square integral");
    };
    return factor * nested(0);
}

}  // namespace

GtRegularityReport gt_check(const RegularizedMetric& m, const CompactBox& K, const EpsGrid& grid) {
    const int n = m.dimension();
    if (K.dimension() != n) throw ArgumentError("box dimension does not match the metric");
    GtRegularityReport rep;
    rep.metric = m.name;
    rep.box = K;
    rep.grid = grid;
    rep.nondegeneracy = check_nondegenerate(m, K, grid);
    const auto inv = metric_inverse(m);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (!m.component(i, j).is_zero())
                rep.metric_sweeps.push_back(sweep_component(component_name(m, "g_", i, j), m.component(i, j), K, grid));
            if (!inv[idx2(n, i, j)].is_zero())
                rep.inverse_sweeps.push_back(sweep_component(component_name(m, "g^", i, j), inv[idx2(n, i, j)], K, grid));
        }

    const auto eps = grid.values();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int a = 0; a < n; ++a) {
                const NetExpr d = derive(m.component(i, j), a);
                if (d.is_zero()) continue;
                SquareIntegralRecord rec;
                rec.name = "d_" + m.labels[static_cast<std::size_t>(a)] + " " + component_name(m, "g_", i, j);
                rec.eps = eps;
                rec.values.assign(eps.size(), 0.0);
                parallel_for(eps.size(), [&](std::size_t k) { rec.values[k] = square_integral(d, K, eps[k]); });
                if (!depends_on_epsilon(d)) {
                    rec.fit.exponent = 0.0;
                } else {
                    try {
                        rec.fit = fit_order(eps, rec.values);
                    } catch (const InsufficientDataError&) {
                        rec.fit_ok = false;
                    }
                }
                rec.square_integrable = rec.fit_ok && rec.fit.exponent >= defaults::gt_bounded_exponent;
                if (rec.fit_ok && !rec.square_integrable && rec.fit.r2 < defaults::r2_threshold) rec.fit_ok = false;
                rep.square_integrals.push_back(std::move(rec));
            }

    bool unbounded = false, undecided = false, not_l2 = false;
    for (const auto* list : {&rep.metric_sweeps, &rep.inverse_sweeps})
        for (const auto& s : *list) {
            if (!s.fit_ok)
                undecided = true;
            else if (!s.bounded)
                unbounded = true;
        }
    for (const auto& r : rep.square_integrals) {
        if (!r.fit_ok)
            undecided = true;
        else if (!r.square_integrable)
            not_l2 = true;
    }
    if (unbounded)
        rep.verdict = GtVerdict::fails_boundedness;
    else if (undecided)
        rep.verdict = GtVerdict::indeterminate;
    else if (not_l2)
        rep.verdict = GtVerdict::fails_l2;
    else
        rep.verdict = GtVerdict::consistent;
    return rep;
}

// ---------------------------------------------------------------------------

std::string GeodesicSolution::csv(bool header) const {
    std::ostringstream os;
    os.precision(17);
    if (header) os << "eps,u,v,x,y,du_v,du_x,du_y\n";
    for (const auto& s : samples) {
        os << eps;
        for (double v : s) os << "," << v;
        os << "\n";
    }
    return os.str();
}

GeodesicSolution geodesic_solve(const RegularizedMetric& m, const ChristoffelField& G, double eps,
                                const GeodesicInit& init, const GeodesicOptions& opts) {
    if (m.dimension() != 4) throw ArgumentError("geodesics need a four-dimensional metric");
    if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("eps must lie in (0, 1]");
    const std::array<double, 7> in{init.u0, init.v0, init.x0, init.y0, init.dv0, init.dx0, init.dy0};
    for (double v : in)
        if (!std::isfinite(v)) throw ArgumentError("initial data must be finite");
    if (!(opts.u_end > init.u0)) throw ArgumentError("u range must end after u0");

    struct Term {
        int k, i, j;
        double mult;
        const NetExpr* e;
    };
    std::vector<Term> terms;
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j)
                if (!G(k, i, j).is_zero()) terms.push_back({k, i, j, i == j ? 1.0 : 2.0, &G(k, i, j)});

    std::array<double, 4> pos{}, vel{};
    auto rhs = [&](double u, const std::vector<double>& y, std::vector<double>& dy) {
        pos = {u, y[0], y[1], y[2]};
        vel = {1.0, y[3], y[4], y[5]};
        std::array<double, 4> q{};
        try {
            for (const auto& t : terms) q[static_cast<std::size_t>(t.k)] += t.mult * eval(*t.e, eps, pos) * vel[static_cast<std::size_t>(t.i)] * vel[static_cast<std::size_t>(t.j)];
        } catch (const EvaluationError&) {
            std::fill(dy.begin(), dy.end(), kNaN);
            return;
        }
        for (int c = 0; c < 3; ++c) {
            dy[static_cast<std::size_t>(c)] = y[static_cast<std::size_t>(c + 3)];
            dy[static_cast<std::size_t>(c + 3)] = -q[static_cast<std::size_t>(c + 1)] + q[0] * vel[static_cast<std::size_t>(c + 1)];
        }
    };

    GeodesicSolution sol;
    sol.eps = eps;
    sol.init = init;
    sol.window = eps * m.pulse_radius;
    OdeOptions oo;
    oo.rel_tol = opts.rel_tol;
    oo.abs_tol = opts.abs_tol;
    if (sol.window > 0.0) {
        const double w = sol.window, cap = eps * opts.window_step_fraction;
        oo.stops = {-w, w};
        oo.max_step = [w, cap](double t) { return (t >= -w && t < w) ? cap : kInf; };
    }
    const auto r = dopri45(rhs, init.u0, {init.v0, init.x0, init.y0, init.dv0, init.dx0, init.dy0}, opts.u_end, oo);
    sol.steps = r.steps;
    sol.rejected = r.rejected;
    sol.max_step = r.max_step_taken;
    sol.status = to_string(r.status);
    sol.complete = r.status == OdeStatus::completed;
    sol.samples.reserve(r.t.size());
    for (std::size_t s = 0; s < r.t.size(); ++s) {
        const auto& y = r.y[s];
        sol.samples.push_back({r.t[s], y[0], y[1], y[2], y[3], y[4], y[5]});
    }

    // Conservation of g(ċ, ∂_v) and g(ċ, ċ).
    double k0 = 0.0, n0 = 0.0;
    for (std::size_t s = 0; s < sol.samples.size(); ++s) {
        const auto& smp = sol.samples[s];
        const std::array<double, 4> p{smp[0], smp[1], smp[2], smp[3]};
        const std::array<double, 4> v{1.0, smp[4], smp[5], smp[6]};
        double kv = 0.0, nv = 0.0;
        bool ok = true;
        try {
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    const NetExpr& g = m.component(i, j);
                    if (g.is_zero()) continue;
                    const double gv = eval(g, eps, p);
                    nv += gv * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
                    if (j == chart::v) kv += gv * v[static_cast<std::size_t>(i)];
                }
        } catch (const EvaluationError&) {
            ok = false;
        }
        if (!ok || !std::isfinite(nv)) break;
        if (s == 0) {
            k0 = kv;
            n0 = nv;
        }
        sol.killing_drift = std::max(sol.killing_drift, std::abs(kv - k0) / std::max(1.0, std::abs(k0)));
        sol.norm_drift = std::max(sol.norm_drift, std::abs(nv - n0) / std::max(1.0, std::abs(n0)));
    }
    return sol;
}

const CoordinateLimit& BrokenGeodesicFit::coordinate(const std::string& label) const {
    for (const auto& c : coordinates)
        if (c.label == label) return c;
    throw ArgumentError("no coordinate named " + label);
}

BrokenGeodesicFit limit_profile(const std::vector<GeodesicSolution>& solutions) {
    if (solutions.size() < 4) throw PreconditionError("limit profile needs at least 4 solutions");
    const GeodesicInit init = solutions.front().init;
    for (const auto& s : solutions) {
        if (!s.complete) throw PreconditionError("solution at eps = " + std::to_string(s.eps) + " is incomplete");
        if (!(s.init == init)) throw PreconditionError("solutions do not share their initial data");
        if (!(s.window > 0.0)) throw PreconditionError("solutions carry no pulse window");
    }
    if (init.u0 != -1.0 || init.dx0 != 0.0 || init.dy0 != 0.0)
        throw PreconditionError("limit profile expects data at u = -1 with zero transverse velocity");

    std::vector<const GeodesicSolution*> sorted;
    for (const auto& s : solutions) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->eps > b->eps; });
    bool geometric = sorted.size() >= 3;
    const double ratio = sorted[1]->eps / sorted[0]->eps;
    for (std::size_t k = 1; k < sorted.size(); ++k)
        if (std::abs(sorted[k]->eps / sorted[k - 1]->eps - ratio) > 1e-9 * ratio) geometric = false;

    BrokenGeodesicFit fit;
    fit.init = init;
    const char* labels[3] = {"v", "x", "y"};
    const double p0[3] = {init.v0, init.x0, init.y0};
    const double d0[3] = {init.dv0, init.dx0, init.dy0};
    for (int c = 0; c < 3; ++c) {
        CoordinateLimit cl;
        cl.label = labels[c];
        cl.pre_slope = d0[c];
        cl.pre_intercept = p0[c] - d0[c] * init.u0;
        std::vector<double> vj, pj;
        for (const auto* s : sorted) {
            const double w = s->window;
            const std::array<double, 7>* pre = nullptr;
            const std::array<double, 7>* post = nullptr;
            for (const auto& smp : s->samples) {
                if (smp[0] <= -w) pre = &smp;
                if (smp[0] >= w && !post) post = &smp;
            }
            if (!pre || !post) throw PreconditionError("solution does not cross the pulse window");
            const auto pi = static_cast<std::size_t>(c + 1), vi = static_cast<std::size_t>(c + 4);
            const double pre_slope = (*pre)[vi], pre_icpt = (*pre)[pi] - pre_slope * (*pre)[0];
            const double post_slope = (*post)[vi], post_icpt = (*post)[pi] - post_slope * (*post)[0];
            double resid = 0.0;
            for (const auto& smp : s->samples)
                if (smp[0] >= w) resid = std::max(resid, std::abs(smp[pi] - (post_icpt + post_slope * smp[0])));
            cl.table.push_back({s->eps, post_slope - pre_slope, post_icpt - pre_icpt, resid});
            vj.push_back(post_slope - pre_slope);
            pj.push_back(post_icpt - pre_icpt);
        }
        if (geometric) {
            const auto ev = richardson(vj, ratio), ep = richardson(pj, ratio);
            cl.velocity_jump = ev.limit;
            cl.velocity_error = ev.error;
            cl.position_jump = ep.limit;
            cl.position_error = ep.error;
        } else {
            cl.velocity_jump = vj.back();
            cl.velocity_error = std::abs(vj.back() - vj[vj.size() - 2]);
            cl.position_jump = pj.back();
            cl.position_error = std::abs(pj.back() - pj[pj.size() - 2]);
        }
        fit.coordinates.push_back(std::move(cl));
    }
    return fit;
}

std::vector<GeodesicInit> default_init_battery() {
    std::vector<GeodesicInit> out;
    const double pts[5][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {-0.5, 0.75}};
    for (const auto& p : pts) {
        GeodesicInit i;
        i.x0 = p[0];
        i.y0 = p[1];
        out.push_back(i);
    }
    GeodesicInit moving;
    moving.x0 = 0.5;
    moving.dx0 = 0.25;
    moving.dy0 = -0.1;
    moving.dv0 = 0.3;
    out.push_back(moving);
    return out;
}

CompletenessTable completeness_scan(const RegularizedMetric& m, const ChristoffelField& G,
                                    const std::vector<GeodesicInit>& inits, const EpsGrid& grid, double u_max) {
    CompletenessTable t;
    t.u_max = u_max;
    const auto eps = grid.values();
    const std::size_t ne = eps.size();
    std::vector<char> ok(inits.size() * ne, 0);
    std::vector<std::string> status(inits.size() * ne);
    GeodesicOptions go;
    go.u_end = u_max;
    parallel_for(ok.size(), [&](std::size_t k) {
        const auto s = geodesic_solve(m, G, eps[k % ne], inits[k / ne], go);
        ok[k] = s.complete;
        status[k] = s.status;
    });
    for (std::size_t i = 0; i < inits.size(); ++i) {
        CompletenessRow row;
        row.init = inits[i];
        row.eps = eps;
        for (std::size_t k = 0; k < ne; ++k) {
            row.complete.push_back(ok[i * ne + k] != 0);
            row.status.push_back(status[i * ne + k]);
        }
        // Walk up from the smallest ε while every solve completes.
        std::vector<std::size_t> order(ne);
        for (std::size_t k = 0; k < ne; ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return eps[a] < eps[b]; });
        for (std::size_t k : order) {
            if (!row.complete[k]) break;
            row.eps0 = eps[k];
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<RicciPointResult> ricci_associate(const RegularizedMetric& m, const CurvatureField& R,
                                              const std::vector<TestFunction>& battery,
                                              const std::vector<std::array<double, 2>>& points,
                                              const EpsGrid& grid) {
    if (m.kind != MetricKind::brinkmann || m.dimension() != 4)
        throw ArgumentError("Ricci association needs a Brinkmann metric");
    const NetExpr lap = derive(derive(m.profile, chart::x), chart::x) + derive(derive(m.profile, chart::y), chart::y);
    std::vector<RicciPointResult> out;
    for (const auto& p : points) {
        RicciPointResult r;
        r.x = p[0];
        r.y = p[1];
        const std::array<double, 4> at{0.0, 0.0, p[0], p[1]};
        r.laplacian = eval(lap, 1.0, at);
        r.coefficient = brinkmann_ricci_constant * r.laplacian;
        const NetExpr line = restrict_to_axis(R.Ric(chart::u, chart::u), chart::u, at);
        r.association = associate(line, battery, grid);
        if (r.association.verdict == AssociationVerdict::associated) {
            const auto cand = DistributionSpec::combination({{r.coefficient, DistributionSpec::delta({0.0})}});
            r.match = match_candidate(r.association, *cand);
            r.matched = r.match->match;
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "+inf" : "-inf";
}

nlohmann::json sweep_json(const ComponentSweep& s) {
    nlohmann::json j{{"component", s.name},
                     {"eps_independent", s.constant},
                     {"exponent", num(s.fit.exponent)},
                     {"r2", s.fit.r2},
                     {"fit_ok", s.fit_ok},
                     {"bounded", s.bounded}};
    j["samples"] = nlohmann::json::array();
    for (const auto& x : s.samples) j["samples"].push_back({{"eps", x.eps}, {"sup", num(x.sup)}});
    return j;
}

}  // namespace

nlohmann::json to_json(const GtRegularityReport& r) {
    nlohmann::json j;
    j["schema"] = "gencalc.gt_check/1";
    j["metric"] = r.metric;
    j["verdict"] = to_string(r.verdict);
    j["box"] = r.box.to_string();
    j["eps_grid"] = {{"start", r.grid.start}, {"ratio", r.grid.ratio}, {"count", r.grid.count}};
    j["nondegeneracy"] = {{"min_abs_det", r.nondegeneracy.min_abs_det},
                          {"eps", r.nondegeneracy.eps_at_min},
                          {"point", r.nondegeneracy.point_at_min}};
    j["metric_sweeps"] = nlohmann::json::array();
    for (const auto& s : r.metric_sweeps) j["metric_sweeps"].push_back(sweep_json(s));
    j["inverse_sweeps"] = nlohmann::json::array();
    for (const auto& s : r.inverse_sweeps) j["inverse_sweeps"].push_back(sweep_json(s));
    j["square_integrals"] = nlohmann::json::array();
    for (const auto& s : r.square_integrals) {
        nlohmann::json js{{"derivative", s.name},
                          {"exponent", num(s.fit.exponent)},
                          {"r2", s.fit.r2},
                          {"fit_ok", s.fit_ok},
                          {"square_integrable", s.square_integrable}};
        js["values"] = nlohmann::json::array();
        for (std::size_t k = 0; k < s.eps.size(); ++k) js["values"].push_back({{"eps", s.eps[k]}, {"value", num(s.values[k])}});
        j["square_integrals"].push_back(std::move(js));
    }
    return j;
}

nlohmann::json to_json(const GeodesicInit& i) {
    return {{"u0", i.u0}, {"v0", i.v0}, {"x0", i.x0}, {"y0", i.y0}, {"dv0", i.dv0}, {"dx0", i.dx0}, {"dy0", i.dy0}};
}

GeodesicInit geodesic_init_from_json(const nlohmann::json& j) {
    GeodesicInit i;
    if (j.is_array()) {
        if (j.size() != 7) throw SchemaError("$: expected 7 numbers (u0, v0, x0, y0, dv0, dx0, dy0)");
        double* f[7] = {&i.u0, &i.v0, &i.x0, &i.y0, &i.dv0, &i.dx0, &i.dy0};
        for (std::size_t k = 0; k < 7; ++k) {
            if (!j[k].is_number()) throw SchemaError("$[" + std::to_string(k) + "]: expected a number");
            *f[k] = j[k].get<double>();
        }
        return i;
    }
    if (!j.is_object()) throw SchemaError("$: expected an object or an array of 7 numbers");
    const std::pair<const char*, double*> fields[] = {{"u0", &i.u0},   {"v0", &i.v0},   {"x0", &i.x0}, {"y0", &i.y0},
                                                      {"dv0", &i.dv0}, {"dx0", &i.dx0}, {"dy0", &i.dy0}};
    for (const auto& [key, dst] : fields) {
        if (!j.contains(key)) continue;
        if (!j.at(key).is_number()) throw SchemaError(std::string("$.") + key + ": expected a number");
        *dst = j.at(key).get<double>();
    }
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const auto& f : fields) known = known || key == f.first;
        if (!known) throw SchemaError("$." + key + ": unknown field");
    }
    return i;
}

nlohmann::json to_json(const GeodesicSolution& s) {
    return {{"eps", s.eps},
            {"init", to_json(s.init)},
            {"complete", s.complete},
            {"status", s.status},
            {"steps", s.steps},
            {"rejected_steps", s.rejected},
            {"max_step", s.max_step},
            {"pulse_window", s.window},
            {"killing_drift", s.killing_drift},
            {"norm_drift", s.norm_drift},
            {"u_end", s.samples.empty() ? kNaN : s.samples.back()[0]}};
}

nlohmann::json to_json(const BrokenGeodesicFit& f) {
    nlohmann::json j;
    j["init"] = to_json(f.init);
    j["coordinates"] = nlohmann::json::array();
    for (const auto& c : f.coordinates) {
        nlohmann::json jc{{"coordinate", c.label},
                          {"velocity_jump", num(c.velocity_jump)},
                          {"velocity_jump_error", num(c.velocity_error)},
                          {"position_jump", num(c.position_jump)},
                          {"position_jump_error", num(c.position_error)},
                          {"pre_slope", c.pre_slope},
                          {"pre_intercept", c.pre_intercept}};
        jc["table"] = nlohmann::json::array();
        for (const auto& t : c.table)
            jc["table"].push_back({{"eps", t.eps},
                                   {"velocity_jump", t.velocity_jump},
                                   {"position_jump", t.position_jump},
                                   {"line_residual", t.line_residual}});
        j["coordinates"].push_back(std::move(jc));
    }
    return j;
}

nlohmann::json to_json(const CompletenessTable& t) {
    nlohmann::json j;
    j["u_range"] = {defaults::geodesic_u0, t.u_max};
    j["rows"] = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json jr{{"init", to_json(r.init)}};
        jr["eps0"] = r.eps0 ? nlohmann::json(*r.eps0) : nlohmann::json(nullptr);
        jr["runs"] = nlohmann::json::array();
        for (std::size_t k = 0; k < r.eps.size(); ++k)
            jr["runs"].push_back({{"eps", r.eps[k]}, {"complete", static_cast<bool>(r.complete[k])}, {"status", r.status[k]}});
        j["rows"].push_back(std::move(jr));
    }
    return j;
}

nlohmann::json to_json(const std::vector<RicciPointResult>& res) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : res) {
        nlohmann::json jr{{"x", r.x},
                          {"y", r.y},
                          {"laplacian", r.laplacian},
                          {"ricci_constant", brinkmann_ricci_constant},
                          {"expected_delta_coefficient", r.coefficient},
                          {"matched", r.matched},
                          {"association", to_json(r.association)}};
        if (r.match) jr["match"] = to_json(*r.match);
        j.push_back(std::move(jr));
    }
    return j;
}

}  // namespace gencalc
