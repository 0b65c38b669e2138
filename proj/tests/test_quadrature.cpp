#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "doctest.h"
#include "gencalc/quadrature.hpp"

using gencalc::integrate;
using gencalc::QuadratureOptions;

TEST_CASE("smooth integrals agree with tanh-sinh") {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [](double x) { return std::exp(-x * x) * std::cos(3.0 * x); };
    const double oracle = ts.integrate(f, -2.0, 1.5);
    const auto r = integrate(f, -2.0, 1.5);
    CHECK(r.converged);
    CHECK(std::abs(r.value - oracle) < 1e-12);
}

TEST_CASE("reversed limits flip the sign") {
    auto f = [](double x) { return x * x; };
    CHECK(integrate(f, 1.0, 0.0).value == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    CHECK(integrate(f, 2.0, 2.0).value == 0.0);
}

TEST_CASE("breakpoints resolve a kink") {
    auto f = [](double x) { return std::abs(x - 0.3); };
    const std::vector<double> cuts{0.3};
    const auto r = integrate(f, -1.0, 1.0, {}, cuts);
    CHECK(r.converged);
    CHECK(std::abs(r.value - (1.3 * 1.3 + 0.7 * 0.7) / 2.0) < 1e-13);
    // Cutting at the kink should be far cheaper than refining onto it.
    const auto blind = integrate(f, -1.0, 1.0);
    CHECK(r.evaluations < blind.evaluations);
}

TEST_CASE("narrow spike is resolved once breakpoints bracket it") {
    const double w = 1e-5;
    auto f = [w](double x) { return std::exp(-(x * x) / (w * w)) / (w * std::sqrt(std::numbers::pi)); };
    const std::vector<double> cuts{-8 * w, 8 * w};
    const auto r = integrate(f, -1.0, 1.0, {}, cuts);
    CHECK(std::abs(r.value - 1.0) < 1e-10);
}

TEST_CASE("cancelling integrand converges at its roundoff floor") {
    // Large terms cancel to a tiny result; absolute 1e-12 is out of reach but
    // the floor set by the reported magnitude lets the rule terminate.
    auto f = [](double x) {
        const double big = 1e8 * std::cos(x);
        return std::pair<double, double>{(big + std::sin(x)) - big, 2.0 * std::abs(big)};
    };
    const auto r = integrate(f, 0.0, 1.0);
    CHECK(r.converged);
    CHECK(std::abs(r.value - (1.0 - std::cos(1.0))) < 1e-6);
}

TEST_CASE("interval cap reports non-convergence") {
    QuadratureOptions o;
    o.max_intervals = 4;
    auto f = [](double x) { return std::sin(1.0 / (x + 1e-3)); };
    const auto r = integrate(f, 0.0, 1.0, o);
    CHECK_FALSE(r.converged);
}
