#include <cmath>
#include <vector>

#include "doctest.h"
#include "gencalc/asymptotics.hpp"
#include "gencalc/embedding.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"

using namespace gencalc;

TEST_CASE("fit_order recovers synthetic power laws") {
    const auto eps = EpsGrid{}.values();
    for (double p : {-2.0, -1.0, 0.0, 1.5, 3.0}) {
        std::vector<double> v;
        for (double e : eps) v.push_back(7.0 * std::pow(e, p));
        const OrderFit f = fit_order(eps, v);
        CHECK(f.exponent == doctest::Approx(p).epsilon(1e-9));
        CHECK(f.r2 > 0.999999);
    }
}

TEST_CASE("fit_order: floor sentinel and insufficient data") {
    const auto eps = EpsGrid{}.values();
    const std::vector<double> zeros(eps.size(), 0.0);
    FitOptions o;
    o.floor = 1e-13;
    CHECK(std::isinf(fit_order(eps, zeros, o).exponent));
    const std::vector<double> few(eps.begin(), eps.begin() + 3);
    CHECK_THROWS_AS(fit_order(few, std::vector<double>{1, 2, 3}), InsufficientDataError);
}

TEST_CASE("box parsing and grid values") {
    const CompactBox K = CompactBox::parse("[-1,1]x[0,2]", 9);
    CHECK(K.dimension() == 2);
    CHECK(K.axes[1].hi == 2.0);
    CHECK(K.axis_points(0).size() == 9);
    CHECK_THROWS_AS(CompactBox::parse("[1,-1]"), ArgumentError);
    const auto v = EpsGrid(0.5, 0.5, 3).values();
    CHECK(v == std::vector<double>{0.5, 0.25, 0.125});
}

TEST_CASE("sup sweep finds a narrow peak") {
    const auto phi = build_vanishing_moment_mollifier(0, 1.0);
    const NetExpr rho = scaled_kernel(phi.factor(0), 0, 0.123);
    const auto s = sup_sweep(rho, CompactBox::cube(1, -1, 1), {0}, EpsGrid(1e-3, 0.5, 3));
    for (const auto& x : s) CHECK(x.sup == doctest::Approx(phi.factor(0).value(0.0) / x.eps).epsilon(1e-6));
}

TEST_CASE("quotient verdicts") {
    const CompactBox K = CompactBox::cube(1, -1.0, 1.0);
    const auto k = translation_kernel_net(build_vanishing_moment_mollifier(2, 1.0));
    const NetExpr d = embed_distribution(DistributionSpec::delta({0.0}), k);
    const NetExpr H = embed_distribution(DistributionSpec::heaviside(1, 0), k);

    SUBCASE("smooth nets are moderate of order zero") {
        const auto r = classify_moderate(embed_smooth(parse_expression("sin(x)")), K, 3);
        CHECK(r.verdict == Verdict::moderate);
        CHECK(r.N == 0);
    }
    SUBCASE("embedded delta is moderate and not negligible with order -1") {
        const auto m = classify_moderate(d, K, 2);
        CHECK(m.verdict == Verdict::moderate);
        CHECK(m.N >= 1);
        const auto r = classify_negligible(d, K, 0, 8);
        CHECK(r.verdict == Verdict::not_negligible);
        CHECK(r.min_exponent() == doctest::Approx(-1.0).epsilon(0.05));
    }
    SUBCASE("H squared minus H is not negligible, sup tends to 1/4") {
        const auto r = equal_in_algebra(H * H, H, K, 0, 8);
        CHECK(r.verdict == Verdict::not_negligible);
        CHECK(std::abs(r.per_alpha[0].samples.back().sup - 0.25) < 1e-3);
    }
    SUBCASE("exp(1/eps) is not moderate") {
        const auto r = classify_moderate(exp(NetExpr::constant(1.0) / NetExpr::epsilon()), K, 0);
        CHECK(r.verdict == Verdict::not_moderate);
    }
    SUBCASE("negligible difference: eps^9 times a smooth function") {
        // The default grid pushes eps^9 under the noise floor after a few
        // samples, so use a slowly shrinking grid.
        const NetExpr n = pow(NetExpr::epsilon(), 9) * parse_expression("cos(x)");
        CHECK(classify_negligible(n, K, 2, 8, EpsGrid(0.9, 0.9, 14)).verdict == Verdict::negligible);
        CHECK(classify_negligible(n, K, 2, 8).verdict == Verdict::indeterminate);
    }
}

TEST_CASE("report JSON carries samples and verdict") {
    const auto r = classify_moderate(embed_smooth(parse_expression("x")), CompactBox::cube(1, -1, 1), 1);
    const auto j = to_json(r);
    CHECK(j.contains("verdict"));
    CHECK(j["per_alpha"][0]["samples_csv"].get<std::string>().rfind("eps,sup\n", 0) == 0);
}
