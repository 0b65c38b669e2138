#include <cmath>
#include <vector>

#include "doctest.h"
#include "gencalc/ode.hpp"

using namespace gencalc;

TEST_CASE("harmonic oscillator over several periods") {
    auto f = [](double, const std::vector<double>& y, std::vector<double>& d) {
        d[0] = y[1];
        d[1] = -y[0];
    };
    const auto s = dopri45(f, 0.0, {1.0, 0.0}, 20.0);
    REQUIRE(s.status == OdeStatus::completed);
    CHECK(s.t.back() == 20.0);
    CHECK(std::abs(s.y.back()[0] - std::cos(20.0)) < 1e-8);
    CHECK(std::abs(s.y.back()[1] + std::sin(20.0)) < 1e-8);
}

TEST_CASE("stops are hit exactly and max_step is honoured") {
    auto f = [](double, const std::vector<double>& y, std::vector<double>& d) { d[0] = y[0]; };
    OdeOptions o;
    o.stops = {0.3, 0.7};
    o.max_step = [](double t) { return t >= 0.3 && t < 0.7 ? 0.01 : 1.0; };
    const auto s = dopri45(f, 0.0, {1.0}, 1.0, o);
    REQUIRE(s.status == OdeStatus::completed);
    int hits = 0;
    for (std::size_t i = 1; i < s.t.size(); ++i) {
        if (s.t[i] == 0.3 || s.t[i] == 0.7) ++hits;
        if (s.t[i - 1] >= 0.3 && s.t[i] <= 0.7) CHECK(s.t[i] - s.t[i - 1] <= 0.01 + 1e-15);
    }
    CHECK(hits == 2);
    CHECK(std::abs(s.y.back()[0] - std::exp(1.0)) < 1e-9);
}

TEST_CASE("finite-time blowup is reported") {
    // y' = y², y(0) = 1 blows up at t = 1.
    auto f = [](double, const std::vector<double>& y, std::vector<double>& d) { d[0] = y[0] * y[0]; };
    const auto s = dopri45(f, 0.0, {1.0}, 2.0);
    CHECK(s.status != OdeStatus::completed);
    CHECK(s.t.back() < 1.0);
    CHECK(s.t.back() > 0.99);
}

TEST_CASE("non-finite right-hand side stops the run") {
    auto f = [](double t, const std::vector<double>&, std::vector<double>& d) { d[0] = t > 0.5 ? std::nan("") : 1.0; };
    const auto s = dopri45(f, 0.0, {0.0}, 1.0);
    CHECK(s.status != OdeStatus::completed);
    CHECK(std::string(to_string(s.status)).size() > 0);
}
