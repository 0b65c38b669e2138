#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"
#include "gencalc/spacetime.hpp"
#include "oracles.hpp"

using namespace gencalc;

namespace {

using oracle::P4;
using oracle::fd_ricci;

struct Pulse {
    TestFunction phi = build_vanishing_moment_mollifier(0, 1.0);
    StrictDeltaNet rho{phi};
    // ρ_ε and its u-derivative straight from the profile.
    double r(double eps, double u) const { return phi.factor(0).value(u / eps) / eps; }
    double dr(double eps, double u) const { return phi.factor(0).derivative(1, u / eps) / (eps * eps); }
};

double ev(const NetExpr& e, double eps, const P4& x) { return eval(e, eps, x); }

}  // namespace

TEST_CASE("flat metric has vanishing curvature") {
    const auto m = flat_metric();
    const auto C = curvature(m, christoffel(m));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    double worst = 0;
    for (int s = 0; s < 100; ++s) {
        const P4 x{U(rng), U(rng), U(rng), U(rng)};
        for (const auto& r : C.riemann) worst = std::max(worst, std::abs(ev(r, 0.1, x)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE_FIXTURE(Pulse, "Brinkmann Christoffels and Ricci match hand-derived formulas") {
    // g_uu = H = f·ρ, g_uv = −1/2: Γ^v_uu = −∂_uH, Γ^v_ua = −∂_aH, Γ^a_uu = −∂_aH/2,
    // and Ric_uu = −ΔH/2.
    const auto m = build_brinkmann(parse_profile("x^2 - 3*x*y + y^3"), rho);
    const auto G = christoffel(m);
    const auto C = curvature(m, G);
    auto f = [](double x, double y) { return x * x - 3 * x * y + y * y * y; };
    auto fx = [](double x, double y) { return 2 * x - 3 * y; };
    auto fy = [](double x, double y) { return -3 * x + 3 * y * y; };
    auto lap = [](double, double y) { return 2 + 6 * y; };
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1, 1);
    for (double eps : {0.5, 0.05}) {
        for (int s = 0; s < 25; ++s) {
            const P4 x{eps * U(rng), U(rng), U(rng), U(rng)};
            const double r = this->r(eps, x[0]), dr = this->dr(eps, x[0]);
            const double X = x[2], Y = x[3];
            auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)); };
            CHECK(close(ev(G(1, 0, 0), eps, x), -f(X, Y) * dr));
            CHECK(close(ev(G(1, 0, 2), eps, x), -fx(X, Y) * r));
            CHECK(close(ev(G(1, 3, 0), eps, x), -fy(X, Y) * r));
            CHECK(close(ev(G(2, 0, 0), eps, x), -0.5 * fx(X, Y) * r));
            CHECK(close(ev(G(3, 0, 0), eps, x), -0.5 * fy(X, Y) * r));
            CHECK(ev(G(0, 0, 0), eps, x) == 0.0);
            CHECK(ev(G(2, 0, 2), eps, x) == 0.0);
            CHECK(close(ev(C.Ric(0, 0), eps, x), -0.5 * lap(X, Y) * r));
            CHECK(ev(C.Ric(0, 2), eps, x) == 0.0);
        }
    }
}

TEST_CASE_FIXTURE(Pulse, "finite-difference oracle pins the Ricci constant") {
    const double eps = 0.5;
    const auto m = build_brinkmann(parse_profile("x^2+y^2"), rho);
    const auto C = curvature(m, christoffel(m));
    const auto g = oracle::brinkmann_numeric([](double x, double y) { return x * x + y * y; },
                                             [&](double u) { return r(eps, u); });
    for (const P4& x : {P4{0.1, 0.0, 0.3, -0.2}, P4{-0.2, 0.4, 1.0, 0.5}}) {
        const double oracle = fd_ricci(g, x, 0, 0);
        const double c = oracle / (4.0 * r(eps, x[0]));  // Δf = 4
        CHECK(c == doctest::Approx(brinkmann_ricci_constant).epsilon(1e-4));
        CHECK(ev(C.Ric(0, 0), eps, x) == doctest::Approx(oracle).epsilon(1e-4));
        CHECK(std::abs(fd_ricci(g, x, 0, 2)) < 1e-5);
    }
}

TEST_CASE_FIXTURE(Pulse, "inverse metric agrees with numeric inversion") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1, 1);
    const auto b = build_brinkmann(parse_profile("x^2-y^2"), rho);
    std::map<std::string, int> vars{{"a", 0}, {"b", 1}, {"c", 2}};
    const auto e = [&](const char* s) { return parse_expression(s, vars); };
    // A non-Brinkmann metric so the adjugate path is exercised as well.
    const auto gm = general_metric({"a", "b", "c"},
                                   {e("2 + a^2"), e("0.3*b"), e("0.1"), e("0.3*b"), e("3 + cos(a)"), e("0.2*c"),
                                    e("0.1"), e("0.2*c"), e("1.5 + b^2")},
                                   "warped");
    for (const RegularizedMetric* m : {&b, &gm}) {
        const int n = m->dimension();
        const auto inv = metric_inverse(*m);
        for (int s = 0; s < 50; ++s) {
            const std::vector<double> x{0.3 * U(rng), U(rng), U(rng), U(rng)};
            Eigen::MatrixXd g(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) g(i, j) = eval(m->component(i, j), 0.3, x);
            const Eigen::MatrixXd gi = g.inverse();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    CHECK(std::abs(eval(inv[static_cast<std::size_t>(i * n + j)], 0.3, x) - gi(i, j)) <
                          1e-10 * std::max(1.0, std::abs(gi(i, j))));
        }
    }
    CHECK(to_json(determinant(b)) == to_json(NetExpr::constant(-0.25)));
}

TEST_CASE("two-sphere Christoffels") {
    std::map<std::string, int> vars{{"t", 0}, {"p", 1}};
    const auto m = general_metric({"t", "p"},
                                  {NetExpr::constant(1.0), NetExpr::constant(0.0), NetExpr::constant(0.0),
                                   parse_expression("sin(t)^2", vars)},
                                  "sphere");
    const auto G = christoffel(m);
    const auto C = curvature(m, G);
    for (double t : {0.3, 1.0, 2.2}) {
        const std::vector<double> x{t, 0.7};
        CHECK(eval(G(0, 1, 1), 0.5, x) == doctest::Approx(-std::sin(t) * std::cos(t)));
        CHECK(eval(G(1, 0, 1), 0.5, x) == doctest::Approx(std::cos(t) / std::sin(t)));
        // Unit sphere: Ric = g.
        CHECK(eval(C.Ric(0, 0), 0.5, x) == doctest::Approx(1.0));
        CHECK(eval(C.Ric(1, 1), 0.5, x) == doctest::Approx(std::sin(t) * std::sin(t)));
    }
}

TEST_CASE_FIXTURE(Pulse, "Riemann antisymmetry is exact and the first Bianchi identity holds") {
    const auto m = build_brinkmann(parse_profile("x^3 - x*y^2 + sin(y)"), rho);
    const auto C = curvature(m, christoffel(m));
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int s = 0; s < 40; ++s) {
        const double eps = 0.02 + 0.4 * (U(rng) + 1) / 2;
        const P4 x{eps * U(rng), U(rng), U(rng), U(rng)};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l) {
                        CHECK(ev(C.R(i, j, k, l), eps, x) == -ev(C.R(i, j, l, k), eps, x));
                        const double b = ev(C.R(i, j, k, l), eps, x) + ev(C.R(i, k, l, j), eps, x) + ev(C.R(i, l, j, k), eps, x);
                        CHECK(std::abs(b) <= 1e-10);
                    }
    }
}

TEST_CASE_FIXTURE(Pulse, "distributional Ricci") {
    const auto harmonic = build_brinkmann(parse_profile("x^2-y^2"), rho);
    const auto rh = ricci_associate(harmonic, curvature(harmonic, christoffel(harmonic)), default_battery(), {{1.0, 0.0}, {0.3, -0.7}});
    for (const auto& r : rh) CHECK(r.matched);
    const auto paraboloid = build_brinkmann(parse_profile("x^2+y^2"), rho);
    const auto rp = ricci_associate(paraboloid, curvature(paraboloid, christoffel(paraboloid)), default_battery(), {{1.0, 0.0}});
    REQUIRE(rp.size() == 1);
    CHECK(rp[0].matched);
    CHECK(rp[0].coefficient == doctest::Approx(-2.0));
    for (const auto& rec : rp[0].match->records) CHECK(std::abs(rec.limit - rec.expected) < 1e-3);
}

TEST_CASE_FIXTURE(Pulse, "gt-regularity") {
    const auto K = CompactBox::cube(4, -1, 1, 17);
    const auto b = gt_check(build_brinkmann(parse_profile("x^2+y^2"), rho), K);
    CHECK(b.verdict == GtVerdict::fails_boundedness);
    REQUIRE(b.metric_sweep("g_uu") != nullptr);
    CHECK(b.metric_sweep("g_uu")->fit.exponent == doctest::Approx(-1.0).epsilon(0.05));
    REQUIRE(b.square_integral("d_u g_uu") != nullptr);
    CHECK(b.square_integral("d_u g_uu")->fit.exponent == doctest::Approx(-3.0).epsilon(0.1 / 3));
    CHECK(gt_check(kink_metric(build_vanishing_moment_mollifier(2, 1.0)), K).verdict == GtVerdict::consistent);
    CHECK(gt_check(flat_metric(), K).verdict == GtVerdict::consistent);
}

TEST_CASE("degenerate metrics are rejected") {
    std::map<std::string, int> vars{{"a", 0}, {"b", 1}};
    const auto m = general_metric({"a", "b"},
                                  {parse_expression("a", vars), NetExpr::constant(0.0), NetExpr::constant(0.0),
                                   NetExpr::constant(1.0)});
    CHECK_THROWS_AS(check_nondegenerate(m, CompactBox::cube(2, -1, 1, 9), EpsGrid{}), DegeneracyError);
    CHECK_THROWS_AS(general_metric({"a", "b"}, {NetExpr::constant(1.0), NetExpr::constant(0.5), NetExpr::constant(0.0),
                                                NetExpr::constant(1.0)}),
                    ArgumentError);
}

TEST_CASE_FIXTURE(Pulse, "geodesics agree with an independent fixed-step RK4") {
    // With u as parameter and Γ^u = 0: x'' = ∂_xH/2, y'' = ∂_yH/2,
    // v'' = ∂_uH + 2(∂_xH x' + ∂_yH y').
    const auto m = build_brinkmann(parse_profile("x^2-y^2"), rho);
    const auto G = christoffel(m);
    GeodesicInit init;
    init.x0 = 1.0;
    init.y0 = 1.0;
    init.dx0 = 0.1;
    for (double eps : {0.5, 0.05}) {
        const auto sol = geodesic_solve(m, G, eps, init);
        REQUIRE(sol.complete);
        auto rhs = [&](double u, const std::array<double, 6>& s) {
            const double X = s[1], Y = s[2], r = this->r(eps, u), dr = this->dr(eps, u);
            const double Hu = (X * X - Y * Y) * dr, Hx = 2 * X * r, Hy = -2 * Y * r;
            return std::array<double, 6>{s[3], s[4], s[5], Hu + 2 * (Hx * s[4] + Hy * s[5]), 0.5 * Hx, 0.5 * Hy};
        };
        std::array<double, 6> s{init.v0, init.x0, init.y0, init.dv0, init.dx0, init.dy0};
        auto axpy = [](const std::array<double, 6>& a, double h, const std::array<double, 6>& b) {
            std::array<double, 6> o{};
            for (int i = 0; i < 6; ++i) o[i] = a[i] + h * b[i];
            return o;
        };
        // Fine steps through the pulse, coarse outside (straight lines).
        std::vector<double> knots{-1.0, -eps, eps, 3.0};
        const int fine = 20000;
        for (int seg = 0; seg < 3; ++seg) {
            const int n = seg == 1 ? fine : 200;
            const double h = (knots[seg + 1] - knots[seg]) / n;
            for (int i = 0; i < n; ++i) {
                const double u = knots[seg] + i * h;
                const auto k1 = rhs(u, s), k2 = rhs(u + h / 2, axpy(s, h / 2, k1)), k3 = rhs(u + h / 2, axpy(s, h / 2, k2)),
                           k4 = rhs(u + h, axpy(s, h, k3));
                for (int c = 0; c < 6; ++c) s[c] += h / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
            }
        }
        const auto& last = sol.samples.back();
        CHECK(last[0] == 3.0);
        for (int c = 0; c < 6; ++c) CHECK(std::abs(last[c + 1] - s[c]) < 1e-8 * std::max(1.0, std::abs(s[c])));
        CHECK(sol.killing_drift <= 1e-6);
        CHECK(sol.norm_drift <= 1e-6);
    }
}

TEST_CASE_FIXTURE(Pulse, "broken geodesic limit") {
    const auto m = build_brinkmann(parse_profile("x^2-y^2"), rho);
    const auto G = christoffel(m);
    GeodesicInit init;
    init.x0 = 1.0;
    init.y0 = 1.0;
    std::vector<GeodesicSolution> sols;
    for (double eps : EpsGrid{}.values()) sols.push_back(geodesic_solve(m, G, eps, init));
    const auto fit = limit_profile(sols);
    // Jump of x' is ∂_x f(1,1)/2 = 1, of y' is ∂_y f/2 = −1; positions stay continuous.
    CHECK(std::abs(fit.coordinate("x").velocity_jump - 1.0) < 1e-6);
    CHECK(std::abs(fit.coordinate("y").velocity_jump + 1.0) < 1e-6);
    CHECK(std::abs(fit.coordinate("x").position_jump) < 1e-6);
    // v' picks up |∇f|²/4 = 2 from the transverse kick (f(1,1) = 0, no initial velocity).
    CHECK(std::abs(fit.coordinate("v").velocity_jump - 2.0) < 1e-6);

    std::vector<GeodesicSolution> few(sols.begin(), sols.begin() + 3);
    CHECK_THROWS_AS(limit_profile(few), PreconditionError);
}

TEST_CASE_FIXTURE(Pulse, "completeness scans") {
    const auto m = build_brinkmann(parse_profile("x^2+y^2"), rho);
    const auto t = completeness_scan(m, christoffel(m), default_init_battery());
    for (const auto& r : t.rows) {
        REQUIRE(r.eps0.has_value());
        CHECK(*r.eps0 == EpsGrid{}.start);
    }
    const auto m4 = build_brinkmann(parse_profile("x^4"), rho);
    GeodesicInit far;
    far.x0 = 3.0;
    const auto t4 = completeness_scan(m4, christoffel(m4), {far});
    REQUIRE(t4.rows.size() == 1);
    const auto& r = t4.rows[0];
    REQUIRE(r.eps0.has_value());
    CHECK(*r.eps0 < EpsGrid{}.start);
    CHECK_FALSE(r.complete.front());
    for (std::size_t k = 0; k < r.eps.size(); ++k)
        if (r.eps[k] <= *r.eps0) CHECK(r.complete[k]);
}

TEST_CASE("geodesic init JSON") {
    GeodesicInit i;
    i.x0 = 0.5;
    i.dy0 = -0.25;
    CHECK(geodesic_init_from_json(to_json(i)) == i);
    CHECK(geodesic_init_from_json(nlohmann::json::array({-1, 0, 0.5, 0, 0, 0, -0.25})) == i);
    try {
        geodesic_init_from_json(nlohmann::json{{"x0", "one"}});
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("x0") != std::string::npos);
    }
}
