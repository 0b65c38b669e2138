#include "gencalc/test_object.hpp"

#include <cmath>
#include <limits>

#include "gencalc/association.hpp"
#include "gencalc/embedding.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"

namespace gencalc {

std::vector<NamedDistribution> default_distribution_battery() {
    return {{"delta", DistributionSpec::delta({0.0})},
            {"heaviside", DistributionSpec::heaviside(1, 0)},
            {"regular(sin(x))", DistributionSpec::regular(parse_expression("sin(x)"), 1)}};
}

std::vector<NamedFunction> default_smooth_battery() {
    return {{"1", NetExpr::constant(1.0)},
            {"x", parse_expression("x")},
            {"x^2", parse_expression("x^2")},
            {"sin(x)", parse_expression("sin(x)")}};
}

std::vector<TestFunction> default_test_function_battery(const TestFunction& phi) {
    if (phi.dimension() != 1) throw ArgumentError("test-function battery is built from a one-dimensional mollifier");
    // Off-centre shifts keep every reference pairing of the default batteries away from zero.
    std::vector<TestFunction> out;
    for (double shift : {-0.25, 0.2, 0.45})
        out.emplace_back(phi.factor(0).rescaled(1.0, shift, 1.0), phi.moment_order(), phi.certificate());
    return out;
}

TestObjectReport verify_test_object(const SmoothingKernelNet& kernel,
                                    const std::vector<NamedDistribution>& distributions,
                                    const std::vector<NamedFunction>& smooth,
                                    const std::vector<TestFunction>& test_functions,
                                    const TestObjectOptions& opts) {
    if (distributions.empty() || smooth.empty() || test_functions.empty())
        throw ArgumentError("test-object batteries must be nonempty");
    auto k = std::make_shared<const SmoothingKernelNet>(kernel);
    TestObjectReport rep;
    rep.warnings = kernel.warnings();

    // (i) weak convergence of Φ_ε u to u.
    rep.pass_i = true;
    for (const auto& [name, u] : distributions) {
        const auto assoc = associate(embed_distribution(u, k), test_functions, opts.grid);
        for (const auto& rec : assoc.records) {
            const auto& psi = test_functions[static_cast<std::size_t>(rec.index)];
            TestObjectReport::WeakRecord w;
            w.distribution = name;
            w.test_function = rec.index;
            w.reference = pairing(*u, psi);
            w.limit = rec.extrapolation.limit;
            w.error = rec.extrapolation.error;
            w.deficit = std::abs(w.reference) > 1e-8 ? 1.0 - w.limit / w.reference
                                                     : std::numeric_limits<double>::quiet_NaN();
            w.pass = rec.converged && std::abs(w.limit - w.reference) <= std::max(defaults::match_tol, 3.0 * w.error);
            rep.pass_i = rep.pass_i && w.pass;
            rep.weak.push_back(w);
        }
    }

    // (ii) Φ_ε f − f = O(ε^{q+1}) on the box.
    const int q = std::max(kernel.base().moment_order(), 0);
    rep.required_order = q + 1;
    rep.pass_ii = true;
    const FitOptions fit_opts{defaults::fit_window, defaults::fit_min_samples, defaults::noise_floor};
    for (const auto& [name, f] : smooth) {
        TestObjectReport::SmoothRecord s;
        s.function = name;
        const NetExpr diff = embed_distribution(DistributionSpec::regular(f, 1), k) - embed_smooth(f);
        try {
            s.fit = fit_order(sup_sweep(diff, opts.box, {0}, opts.order_grid), fit_opts);
            s.pass = s.fit.exponent >= rep.required_order - defaults::exponent_slack;
        } catch (const InsufficientDataError&) {
            s.fit.exponent = std::numeric_limits<double>::quiet_NaN();
            s.pass = false;
        }
        rep.pass_ii = rep.pass_ii && s.pass;
        rep.smooth.push_back(s);
    }

    // (iii) Φ_ε u moderate.
    rep.pass_iii = true;
    for (const auto& [name, u] : distributions) {
        const auto r = classify_moderate(embed_distribution(u, k), opts.box, opts.alpha_max, opts.grid);
        TestObjectReport::ModerateRecord m{name, r.verdict, r.N, r.verdict == Verdict::moderate};
        rep.pass_iii = rep.pass_iii && m.pass;
        rep.moderate.push_back(m);
    }
    return rep;
}

namespace {

nlohmann::json finite_or_label(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "+inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const TestObjectReport& r) {
    nlohmann::json j;
    j["schema"] = "gencalc.test_object/1";
    j["pass"] = r.pass();
    j["conditions"] = {{"i_weak_convergence", r.pass_i},
                       {"ii_smooth_reproduction", r.pass_ii},
                       {"iii_moderateness", r.pass_iii}};
    j["required_order"] = r.required_order;
    j["weak"] = nlohmann::json::array();
    for (const auto& w : r.weak)
        j["weak"].push_back({{"distribution", w.distribution},
                             {"test_function", w.test_function},
                             {"reference", w.reference},
                             {"limit", finite_or_label(w.limit)},
                             {"error_estimate", finite_or_label(w.error)},
                             {"deficit", finite_or_label(w.deficit)},
                             {"pass", w.pass}});
    j["smooth"] = nlohmann::json::array();
    for (const auto& s : r.smooth)
        j["smooth"].push_back({{"function", s.function},
                               {"order", finite_or_label(s.fit.exponent)},
                               {"r2", s.fit.r2},
                               {"pass", s.pass}});
    j["moderate"] = nlohmann::json::array();
    for (const auto& m : r.moderate) {
        nlohmann::json jm{{"distribution", m.distribution}, {"verdict", to_string(m.verdict)}, {"pass", m.pass}};
        if (m.verdict == Verdict::moderate) jm["N"] = m.N;
        j["moderate"].push_back(jm);
    }
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace gencalc
