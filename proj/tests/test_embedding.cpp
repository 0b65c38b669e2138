#include <array>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "doctest.h"
#include "gencalc/asymptotics.hpp"
#include "gencalc/distribution.hpp"
#include "gencalc/embedding.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"

using namespace gencalc;

namespace {

double ev(const NetExpr& e, double eps, double x) {
    const std::array<double, 1> p{x};
    return eval(e, eps, p);
}

struct Fixture {
    TestFunction phi = build_vanishing_moment_mollifier(2, 1.0);
    SmoothingKernelNet kernel = translation_kernel_net(phi);
    // Kernel as a plain function of y for the oracles: φ_ε(y − x).
    double k(double eps, double x, double y) const { return phi.factor(0).value((y - x) / eps) / eps; }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "delta embeds as the scaled mollifier") {
    const NetExpr d = embed_distribution(DistributionSpec::delta({0.0}), kernel);
    for (double eps : {0.5, 0.01})
        for (double x : {-0.3, 0.0, 0.004, 0.2}) CHECK(ev(d, eps, x) == doctest::Approx(k(eps, x, 0.0)));
}

TEST_CASE_FIXTURE(Fixture, "Heaviside and regular embeddings match a tanh-sinh convolution") {
    boost::math::quadrature::tanh_sinh<double> ts;
    const NetExpr h = embed_distribution(DistributionSpec::heaviside(1, 0), kernel);
    const NetExpr s = embed_distribution(DistributionSpec::regular(parse_expression("sin(3*x)"), 1), kernel);
    for (double eps : {0.4, 0.05}) {
        for (double x : {-0.2, 0.01, 0.3}) {
            const double lo = x - eps, hi = x + eps;
            const double oh = lo >= 0 ? ts.integrate([&](double y) { return k(eps, x, y); }, lo, hi)
                              : hi <= 0 ? 0.0
                                        : ts.integrate([&](double y) { return k(eps, x, y); }, 0.0, hi);
            CHECK(std::abs(ev(h, eps, x) - oh) < 1e-10);
            const double os = ts.integrate([&](double y) { return std::sin(3 * y) * k(eps, x, y); }, lo, hi);
            CHECK(std::abs(ev(s, eps, x) - os) < 1e-10);
        }
    }
}

TEST_CASE_FIXTURE(Fixture, "principal value embedding matches an excision oracle") {
    boost::math::quadrature::tanh_sinh<double> ts;
    const NetExpr v = embed_distribution(DistributionSpec::vp(), kernel);
    for (double eps : {0.3, 0.02}) {
        for (double x : {-0.01, 0.0, 0.015, 0.5}) {
            // ∫₀^∞ (ψ(y) − ψ(−y))/y dy with ψ = φ_ε(· − x); the integrand is smooth at 0.
            const double r = std::abs(x) + eps;
            const double o = ts.integrate(
                [&](double y) { return y == 0.0 ? 0.0 : (k(eps, x, y) - k(eps, x, -y)) / y; }, 0.0, r);
            CHECK(std::abs(ev(v, eps, x) - o) < 1e-8 * std::max(1.0, std::abs(o)));
        }
    }
}

TEST_CASE_FIXTURE(Fixture, "derivatives fall on the kernel") {
    const NetExpr h = embed_distribution(DistributionSpec::heaviside(1, 0), kernel);
    const NetExpr d = embed_distribution(DistributionSpec::delta({0.0}), kernel);
    const NetExpr dd = embed_distribution(DistributionSpec::derivative(DistributionSpec::delta({0.0}), 0), kernel);
    for (double x : {-0.05, 0.0, 0.03}) {
        CHECK(ev(derive(h, 0), 0.1, x) == doctest::Approx(ev(d, 0.1, x)));
        CHECK(ev(derive(d, 0), 0.1, x) == doctest::Approx(ev(dd, 0.1, x)));
    }
    // ι(|x|)'' is twice the embedded delta.
    const NetExpr a = embed_distribution(DistributionSpec::regular(parse_expression("abs(x)"), 1), kernel);
    for (double x : {-0.05, 0.0, 0.03}) CHECK(ev(derive(derive(a, 0), 0), 0.1, x) == doctest::Approx(2 * ev(d, 0.1, x)).epsilon(1e-8));
}

TEST_CASE("embedding of smooth functions agrees to order q+1") {
    // A_q with a nonzero (q+1)-th moment: sup|ι(f) − σ(f)| = O(ε^{q+1}).
    const CompactBox K = CompactBox::cube(1, -1.0, 1.0);
    for (int q : {2, 4}) {
        const auto k = translation_kernel_net(build_vanishing_moment_mollifier(q, 1.0, 1, MollifierConstruction::exact_order));
        for (const char* s : {"sin(x)", "exp(x)"}) {
            CAPTURE(q);
            CAPTURE(s);
            const NetExpr f = parse_expression(s);
            const NetExpr d = embed_distribution(DistributionSpec::regular(f, 1), k) - f;
            const OrderFit fit = fit_order(sup_sweep(d, K, {0}, EpsGrid::order_grid()), {8, 6, 1e-13});
            CHECK(fit.exponent == doctest::Approx(q + 1).epsilon(0.3 / (q + 1)));
        }
    }
}

TEST_CASE("polynomials below the moment order embed exactly") {
    // Every moment 1..q vanishes, so ι(x³) = x³ once q ≥ 3: the difference
    // sits at rounding level and no decay order is defined.
    const auto k = translation_kernel_net(build_vanishing_moment_mollifier(4, 1.0, 1, MollifierConstruction::exact_order));
    const NetExpr f = parse_expression("x^3");
    const NetExpr d = embed_distribution(DistributionSpec::regular(f, 1), k) - f;
    for (double eps : {0.5, 0.1, 0.01})
        for (double x : {-0.8, 0.0, 0.6}) CHECK(std::abs(ev(d, eps, x)) < 1e-13);
}

TEST_CASE("dimension mismatch is rejected") {
    const auto k = translation_kernel_net(build_vanishing_moment_mollifier(2, 1.0));
    CHECK_THROWS_AS(embed_distribution(DistributionSpec::delta({0.0, 0.0}), k), ArgumentError);
}

TEST_CASE("two-dimensional delta embeds as a tensor product") {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 1.0, 2);
    const NetExpr d = embed_distribution(DistributionSpec::delta({0.0, 0.0}), translation_kernel_net(phi));
    const std::array<double, 2> p{0.01, -0.02};
    const double f = phi.factor(0).value(-0.01 / 0.05) * phi.factor(1).value(0.02 / 0.05) / (0.05 * 0.05);
    CHECK(eval(d, 0.05, p) == doctest::Approx(f));
}

TEST_CASE("distribution JSON round trip") {
    const auto u = DistributionSpec::combination(
        {{2.0, DistributionSpec::delta({0.5})}, {-1.0, DistributionSpec::derivative(DistributionSpec::heaviside(1, 0), 0)}});
    const auto back = distribution_from_json(to_json(*u));
    CHECK(to_json(*back) == to_json(*u));
    const TestFunction psi = scale_translate(build_vanishing_moment_mollifier(2, 1.0), 0.7, std::array{0.2});
    CHECK(pairing(*back, psi) == doctest::Approx(2 * psi.value(std::array{0.5}) - psi.value(std::array{0.0})));
    CHECK_THROWS_AS(distribution_from_json(nlohmann::json{{"kind", "delta"}, {"point", "zero"}}), SchemaError);
}
