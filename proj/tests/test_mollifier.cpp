#include <array>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gencalc/error.hpp"
#include "gencalc/mollifier.hpp"
#include "oracles.hpp"

using namespace gencalc;


TEST_CASE("A_q mollifiers: unit mass and vanishing moments under an independent oracle") {
    for (int q : {0, 2, 4, 6}) {
        for (auto c : {MollifierConstruction::even, MollifierConstruction::exact_order}) {
            CAPTURE(q);
            const TestFunction phi = build_vanishing_moment_mollifier(q, 1.0, 1, c);
            CHECK(phi.moment_order() == q);
            CHECK(std::abs(oracle::moment(phi, 0) - 1.0) < 1e-12);
            for (int k = 1; k <= q; ++k) CHECK(std::abs(oracle::moment(phi, k)) < 1e-10);
            for (double r : phi.certificate().moment_residuals) CHECK(r < 1e-10);
        }
    }
}

TEST_CASE("exact_order construction keeps the next moment") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0, 1, MollifierConstruction::exact_order);
    CHECK(std::abs(oracle::moment(phi, 5)) > 1e-4);
    const TestFunction even = build_vanishing_moment_mollifier(4, 1.0);
    CHECK(even.is_even());
    CHECK(std::abs(oracle::moment(even, 5)) < 1e-12);
}

TEST_CASE("radius rescales support and preserves moments") {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 0.25);
    CHECK(phi.support_radius() == doctest::Approx(0.25));
    CHECK(std::abs(oracle::moment(phi, 0) - 1.0) < 1e-12);
    CHECK(std::abs(oracle::moment(phi, 2)) < 1e-10);
    CHECK(phi.value(std::array{0.26}) == 0.0);
}

TEST_CASE("tensor-product mollifier in two dimensions") {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 1.0, 2);
    CHECK(phi.dimension() == 2);
    CHECK(phi.mass() == doctest::Approx(1.0).epsilon(1e-12));
    const std::array<int, 2> a{1, 1};
    CHECK(std::abs(moment(phi, a)) < 1e-10);
    const std::array<double, 2> p{0.2, -0.4};
    CHECK(phi.value(p) == doctest::Approx(phi.factor(0).value(0.2) * phi.factor(1).value(-0.4)));
}

TEST_CASE("scale_translate keeps mass and moves the centre") {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 1.0);
    const std::array<double, 1> x{0.7};
    const TestFunction s = scale_translate(phi, 0.1, x);
    CHECK(s.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.center()[0] == doctest::Approx(0.7));
    CHECK(s.support_radius() == doctest::Approx(0.1));
    CHECK(s.value(std::array{0.7}) == doctest::Approx(10.0 * phi.value(std::array{0.0})));
}

TEST_CASE("bump derivatives match central differences") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0);
    const BumpPolynomial& f = phi.factor(0);
    const double h = 1e-5;
    for (double x : {-0.8, -0.3, 0.1, 0.55, 0.9}) {
        for (int k = 1; k <= 3; ++k) {
            const double fd = (f.derivative(k - 1, x + h) - f.derivative(k - 1, x - h)) / (2 * h);
            CHECK(f.derivative(k, x) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("cdf integrates the profile") {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 1.0);
    const BumpPolynomial& f = phi.factor(0);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double x : {-0.5, 0.0, 0.4}) {
        const double o = ts.integrate([&](double t) { return f.value(t); }, -1.0, x);
        CHECK(std::abs(f.cdf(x) - o) < 1e-12);
    }
    CHECK(f.cdf(2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("JSON round trip") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 0.5, 1, MollifierConstruction::exact_order);
    const TestFunction back = test_function_from_json(to_json(phi));
    CHECK(back.moment_order() == 4);
    CHECK(back.construction() == MollifierConstruction::exact_order);
    for (double x : {-0.3, 0.0, 0.21}) CHECK(back.value(std::array{x}) == phi.value(std::array{x}));
    CHECK(to_json(back) == to_json(phi));
}

TEST_CASE("argument and schema errors") {
    CHECK_THROWS_AS(build_vanishing_moment_mollifier(2, -1.0), ArgumentError);
    CHECK_THROWS_AS(build_vanishing_moment_mollifier(-1, 1.0), ArgumentError);
    nlohmann::json j = to_json(build_vanishing_moment_mollifier(2, 1.0));
    j["support_radius"] = "wide";
    CHECK_THROWS_AS(test_function_from_json(j), SchemaError);
}

TEST_CASE("strict delta net requires unit mass") {
    CHECK_THROWS(strict_delta_net(build_bump(1.0)));
    const StrictDeltaNet rho(build_vanishing_moment_mollifier(0, 1.0));
    CHECK(rho.at(0.01).mass() == doctest::Approx(1.0).epsilon(1e-12));
}
