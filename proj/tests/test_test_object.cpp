#include <cmath>

#include "doctest.h"
#include "gencalc/test_object.hpp"

using namespace gencalc;

TEST_CASE("canonical A_4 translation kernel is a test object") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0);
    const auto r = verify_test_object(translation_kernel_net(phi), default_distribution_battery(),
                                      default_smooth_battery(), default_test_function_battery(phi));
    CHECK(r.pass_i);
    CHECK(r.pass_ii);
    CHECK(r.pass_iii);
    CHECK(r.required_order >= 5);
    for (const auto& s : r.smooth) CHECK(s.fit.exponent >= 5.0 - 0.3);
}

TEST_CASE("mass-0.9 kernel fails weak convergence with deficit 0.1") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0);
    const auto r = verify_test_object(SmoothingKernelNet(phi, 0.9, 0.0), default_distribution_battery(),
                                      default_smooth_battery(), default_test_function_battery(phi));
    CHECK_FALSE(r.pass_i);
    CHECK_FALSE(r.pass());
    int measured = 0;
    for (const auto& w : r.weak) {
        if (std::isnan(w.deficit)) continue;
        ++measured;
        CHECK(std::abs(w.deficit - 0.1) < 1e-3);
    }
    CHECK(measured > 0);
}

TEST_CASE("an eps-growing kernel fails moderateness-preserving weak limits") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0);
    const auto r = verify_test_object(SmoothingKernelNet(phi, 1.0, -1.0), default_distribution_battery(),
                                      default_smooth_battery(), default_test_function_battery(phi));
    CHECK_FALSE(r.pass_i);
}

TEST_CASE("report JSON") {
    const TestFunction phi = build_vanishing_moment_mollifier(4, 1.0);
    const auto r = verify_test_object(translation_kernel_net(phi), default_distribution_battery(),
                                      default_smooth_battery(), default_test_function_battery(phi));
    const auto j = to_json(r);
    CHECK(j.contains("weak"));
    CHECK(j.contains("smooth"));
    CHECK(j.contains("moderate"));
}
