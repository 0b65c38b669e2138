#include "gencalc/association.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "gencalc/defaults.hpp"
#include "gencalc/error.hpp"
#include "gencalc/parallel.hpp"
#include "gencalc/quadrature.hpp"

namespace gencalc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kFeatureCuts = 8;

}  // namespace

double pair(const NetExpr& e, const TestFunction& psi, double eps) {
    const int n = psi.dimension();
    if (n < e.node().dimension) throw ArgumentError("test function has fewer axes than the net");
    const auto& dom = e.domain();
    for (std::size_t a = 0; a < dom.size() && a < static_cast<std::size_t>(n); ++a) {
        const auto& f = psi.factor(static_cast<int>(a));
        if (!(f.lower() > dom[a].lo && f.upper() < dom[a].hi))
            throw ArgumentError("test function support leaves the net domain on axis " + std::to_string(a));
    }
    std::vector<std::vector<double>> cuts(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) cuts[static_cast<std::size_t>(a)].push_back(psi.factor(a).center());
    for (const auto& ft : features(e, eps)) {
        if (ft.axis >= n) continue;
        for (int i = 0; i <= kFeatureCuts; ++i)
            cuts[static_cast<std::size_t>(ft.axis)].push_back(ft.center + ft.half_width * (2.0 * i / kFeatureCuts - 1.0));
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    std::function<double(int)> nested = [&](int axis) -> double {
        const auto& f = psi.factor(axis);
        auto integrand = [&](double t) {
            const double w = f.value(t);
            if (w == 0.0) return 0.0;
            x[static_cast<std::size_t>(axis)] = t;
            return w * (axis + 1 < n ? nested(axis + 1) : eval(e, eps, x));
        };
        QuadratureOptions qo;
        qo.abs_tol = defaults::pair_abs_tol;
        qo.rel_tol = defaults::pair_rel_tol;
        auto r = integrate(integrand, f.lower(), f.upper(), qo, cuts[static_cast<std::size_t>(axis)]);
        if (!r.converged) throw EvaluationError("pairing quadrature did not converge (error " + std::to_string(r.error) + ", eps " + std::to_string(eps) + ")", "pair");
        return r.value;
    };
    return nested(0);
}

Extrapolation richardson(const std::vector<double>& values, double ratio) {
    Extrapolation out;
    const std::size_t n = values.size();
    out.extrapolants.assign(n, kNaN);
    if (n < 3) throw InsufficientDataError("Richardson extrapolation needs at least 3 samples");
    const double r = ratio, r2 = ratio * ratio;
    std::vector<double> R1(n, kNaN);
    for (std::size_t k = 1; k < n; ++k) R1[k] = (values[k] - r * values[k - 1]) / (1.0 - r);
    for (std::size_t k = 2; k < n; ++k) out.extrapolants[k] = (R1[k] - r2 * R1[k - 1]) / (1.0 - r2);
    out.limit = out.extrapolants[n - 1];
    out.error = std::abs(out.extrapolants[n - 1] - R1[n - 1]);
    return out;
}

const char* to_string(AssociationVerdict v) {
    switch (v) {
        case AssociationVerdict::associated: return "Associated";
        case AssociationVerdict::divergent: return "Divergent";
        case AssociationVerdict::indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

std::string AssociationResult::verdict_label() const {
    if (verdict == AssociationVerdict::divergent) {
        std::ostringstream os;
        os.precision(4);
        os << "Divergent(" << growth_exponent << ")";
        return os.str();
    }
    return to_string(verdict);
}

AssociationResult associate(const NetExpr& e, const std::vector<TestFunction>& battery, const EpsGrid& grid) {
    if (battery.empty()) throw ArgumentError("association needs a nonempty test-function battery");
    AssociationResult res;
    res.battery = battery;
    res.grid = grid;
    const auto eps = grid.values();
    const std::size_t ne = eps.size();
    std::vector<double> table(battery.size() * ne);
    parallel_for(table.size(), [&](std::size_t t) { table[t] = pair(e, battery[t / ne], eps[t % ne]); });

    const FitOptions fit_opts{defaults::fit_window, defaults::fit_min_samples, defaults::noise_floor};
    bool all_converged = true;
    double growth = 0.0;
    bool any_divergent = false;
    for (std::size_t i = 0; i < battery.size(); ++i) {
        PairingRecord rec;
        rec.index = static_cast<int>(i);
        rec.eps = eps;
        rec.pairings.assign(table.begin() + static_cast<long>(i * ne), table.begin() + static_cast<long>((i + 1) * ne));
        std::vector<double> mags;
        for (double p : rec.pairings) mags.push_back(std::abs(p));
        try {
            rec.growth = fit_order(eps, mags, fit_opts);
            rec.divergent = std::isfinite(rec.growth.exponent) && rec.growth.exponent < defaults::divergence_exponent &&
                            rec.growth.r2 >= defaults::r2_threshold;
        } catch (const InsufficientDataError&) {
            rec.growth = {};
        }
        rec.extrapolation = richardson(rec.pairings, grid.ratio);
        const double scale = std::max(1.0, std::abs(rec.extrapolation.limit));
        rec.converged = !rec.divergent && std::isfinite(rec.extrapolation.limit) &&
                        rec.extrapolation.error <= 0.1 * defaults::match_tol * scale;
        if (rec.divergent) {
            growth = any_divergent ? std::min(growth, rec.growth.exponent) : rec.growth.exponent;
            any_divergent = true;
        }
        all_converged = all_converged && rec.converged;
        res.records.push_back(std::move(rec));
    }
    if (any_divergent) {
        res.verdict = AssociationVerdict::divergent;
        res.growth_exponent = growth;
    } else {
        res.verdict = all_converged ? AssociationVerdict::associated : AssociationVerdict::indeterminate;
    }
    return res;
}

std::vector<TestFunction> default_battery() {
    const TestFunction phi = build_vanishing_moment_mollifier(2, 1.0);
    const BumpPolynomial& f = phi.factor(0);
    // (scale, shift) of each translate; all keep unit mass.
    const double placements[5][2] = {{1.0, 0.0}, {0.8, 0.3}, {1.2, -0.4}, {0.6, 0.2}, {1.5, 0.5}};
    std::vector<TestFunction> out;
    for (const auto& p : placements) out.emplace_back(f.rescaled(p[0], p[1], 1.0 / p[0]), 2, phi.certificate());
    out.emplace_back(BumpPolynomial(0.1, 1.3, {1.0, 0.5, -0.3}));
    out.emplace_back(BumpPolynomial(-0.2, 0.9, {0.5, -1.0, 0.0, 0.8}));
    return out;
}

MatchReport match_candidate(const AssociationResult& r, const DistributionSpec& candidate) {
    if (r.verdict != AssociationVerdict::associated)
        throw PreconditionError("candidate matching needs an Associated result, got " + r.verdict_label());
    MatchReport m;
    m.match = true;
    for (const auto& rec : r.records) {
        const auto& psi = r.battery[static_cast<std::size_t>(rec.index)];
        if (psi.dimension() != candidate.dimension())
            throw ArgumentError("candidate dimension does not match the battery");
        MatchRecord mr;
        mr.index = rec.index;
        mr.limit = rec.extrapolation.limit;
        mr.expected = pairing(candidate, psi);
        mr.tolerance = std::max(defaults::match_tol, 3.0 * rec.extrapolation.error);
        mr.match = std::abs(mr.limit - mr.expected) <= mr.tolerance;
        m.match = m.match && mr.match;
        m.records.push_back(mr);
    }
    return m;
}

std::string pairing_table_csv(const AssociationResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "index,eps,pairing,extrapolant\n";
    for (const auto& rec : r.records)
        for (std::size_t k = 0; k < rec.eps.size(); ++k) {
            os << rec.index << "," << rec.eps[k] << "," << rec.pairings[k] << ",";
            if (std::isfinite(rec.extrapolation.extrapolants[k])) os << rec.extrapolation.extrapolants[k];
            os << "\n";
        }
    return os.str();
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const AssociationResult& r) {
    nlohmann::json j;
    j["schema"] = "gencalc.association/1";
    j["verdict"] = to_string(r.verdict);
    j["verdict_label"] = r.verdict_label();
    if (r.verdict == AssociationVerdict::divergent) j["growth_exponent"] = r.growth_exponent;
    j["eps_grid"] = {{"start", r.grid.start}, {"ratio", r.grid.ratio}, {"count", r.grid.count}};
    j["records"] = nlohmann::json::array();
    for (const auto& rec : r.records) {
        nlohmann::json jr;
        jr["index"] = rec.index;
        jr["limit"] = finite_or_null(rec.extrapolation.limit);
        jr["error_estimate"] = finite_or_null(rec.extrapolation.error);
        jr["converged"] = rec.converged;
        jr["divergent"] = rec.divergent;
        jr["growth_exponent"] = finite_or_null(rec.growth.exponent);
        jr["growth_r2"] = rec.growth.r2;
        jr["table"] = nlohmann::json::array();
        for (std::size_t k = 0; k < rec.eps.size(); ++k)
            jr["table"].push_back({{"eps", rec.eps[k]},
                                   {"pairing", finite_or_null(rec.pairings[k])},
                                   {"extrapolant", finite_or_null(rec.extrapolation.extrapolants[k])}});
        j["records"].push_back(std::move(jr));
    }
    j["pairing_csv"] = pairing_table_csv(r);
    return j;
}

nlohmann::json to_json(const MatchReport& m) {
    nlohmann::json j;
    j["match"] = m.match;
    j["records"] = nlohmann::json::array();
    for (const auto& r : m.records)
        j["records"].push_back({{"index", r.index},
                                {"limit", r.limit},
                                {"expected", r.expected},
                                {"tolerance", r.tolerance},
                                {"match", r.match}});
    return j;
}

std::vector<TestFunction> battery_from_json(const nlohmann::json& j) {
    if (j.is_object() && j.value("default", false)) return default_battery();
    const nlohmann::json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("battery")) throw SchemaError("$.battery: missing");
        arr = &j.at("battery");
    }
    if (!arr->is_array() || arr->empty()) throw SchemaError("$.battery: expected a nonempty array");
    std::vector<TestFunction> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        try {
            out.push_back(test_function_from_json((*arr)[i]));
        } catch (const SchemaError& e) {
            throw SchemaError("$.battery[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return out;
}

nlohmann::json battery_to_json(const std::vector<TestFunction>& battery) {
    nlohmann::json j;
    j["battery"] = nlohmann::json::array();
    for (const auto& t : battery) j["battery"].push_back(to_json(t));
    return j;
}

}  // namespace gencalc
