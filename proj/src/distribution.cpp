#include "gencalc/distribution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "gencalc/defaults.hpp"
#include "gencalc/error.hpp"
#include "gencalc/expression_parser.hpp"
#include "gencalc/quadrature.hpp"

namespace gencalc {
namespace {

// Kinks of abs/sign whose argument is x_a or x_a + c.
void detect_kinks(const NetExpr& f, std::vector<std::vector<double>>& bp) {
    std::vector<const Node*> stack{&f.node()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        for (const auto& c : n->children) stack.push_back(c.get());
        if (n->kind != NodeKind::abs && n->kind != NodeKind::sign) continue;
        const Node& a = *n->children[0];
        int axis = -1;
        double root = 0.0;
        if (a.kind == NodeKind::coordinate) {
            axis = a.axis;
        } else if (a.kind == NodeKind::sum && a.children.size() == 2) {
            const Node* x = a.children[0].get();
            const Node* c = a.children[1].get();
            if (x->kind == NodeKind::constant) std::swap(x, c);
            if (x->kind == NodeKind::coordinate && c->kind == NodeKind::constant) {
                axis = x->axis;
                root = -c->value;
            }
        }
        if (axis >= 0 && static_cast<std::size_t>(axis) < bp.size()) bp[static_cast<std::size_t>(axis)].push_back(root);
    }
}

struct TaylorUnavailable {};

double pair_regular(const DistributionSpec& u, const Probe& g) {
    const int n = g.dimension();
    // A polynomial of degree < k in y_a pairs to zero against a probe
    // differentiated k times along a, so f's Taylor polynomial at the probe
    // centre can be subtracted. This removes the O(ε^{-k}) cancellation of
    // high-order kernel derivatives on smooth stretches of f.
    int taylor_axis = -1, taylor_order = 0;
    for (int a = 0; a < n; ++a)
        if (g.factors[static_cast<std::size_t>(a)].order > taylor_order) {
            taylor_axis = a;
            taylor_order = g.factors[static_cast<std::size_t>(a)].order;
        }
    std::vector<NetExpr> taylor;
    double center = 0.0;
    if (taylor_axis >= 0) {
        taylor = u.axis_derivatives(taylor_axis, taylor_order);
        center = g.factors[static_cast<std::size_t>(taylor_axis)].profile->center();
    }
    std::vector<double> y(static_cast<std::size_t>(n), 0.0), yc;
    // (f − Taylor polynomial, size of the subtracted terms)
    auto fvalue = [&]() -> std::pair<double, double> {
        const double fv = eval(u.expression(), 1.0, y);
        if (taylor.empty()) return {fv, std::abs(fv)};
        yc = y;
        yc[static_cast<std::size_t>(taylor_axis)] = center;
        const double h = y[static_cast<std::size_t>(taylor_axis)] - center;
        double poly = 0.0, mag = std::abs(fv), term = 1.0;
        try {
            for (std::size_t j = 0; j < taylor.size(); ++j) {
                const double t = eval(taylor[j], 1.0, yc) * term;
                poly += t;
                mag += std::abs(t);
                term *= h / static_cast<double>(j + 1);
            }
        } catch (const EvaluationError&) {
            throw TaylorUnavailable{};
        }
        return {fv - poly, mag};
    };
    std::function<std::pair<double, double>(int)> nested = [&](int axis) -> std::pair<double, double> {
        const double lo = g.lower(axis), hi = g.upper(axis);
        std::vector<double> cuts = u.breakpoints()[static_cast<std::size_t>(axis)];
        cuts.push_back(g.factors[static_cast<std::size_t>(axis)].profile->center());
        // Inner levels report the error estimate as the magnitude.
        auto integrand = [&](double t) -> std::pair<double, double> {
            y[static_cast<std::size_t>(axis)] = t;
            if (axis + 1 < n) return nested(axis + 1);
            const double gv = g.value(y);
            if (gv == 0.0) return {0.0, 0.0};
            const auto [fv, mag] = fvalue();
            return {gv * fv, std::abs(gv) * mag};
        };
        const auto r = integrate(integrand, lo, hi, {}, cuts);
        return {require_converged(r, "regular distribution pairing"), r.error / (50.0 * 2.220446049250313e-16)};
    };
    try {
        return nested(0).first;
    } catch (const TaylorUnavailable&) {
        taylor.clear();  // f not differentiable at the centre; pair f itself
        return nested(0).first;
    }
}

double pair_vp(const Probe& g) {
    const double lo = g.lower(0), hi = g.upper(0);
    std::array<double, 1> y{};
    auto gv = [&](double t) {
        y[0] = t;
        return g.value(y);
    };
    if (lo >= 0.0 || hi <= 0.0) {
        return require_converged(integrate([&](double t) { return gv(t) / t; }, lo, hi), "vp pairing");
    }
    // Symmetrized form, integrable at 0.
    const double top = std::max(-lo, hi);
    const std::array<double, 3> cuts{-lo, hi, std::abs(g.factors[0].profile->center())};
    auto f = [&](double t) { return (gv(t) - gv(-t)) / t; };
    return require_converged(integrate(f, 0.0, top, {}, cuts), "vp pairing");
}

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw SchemaError(path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + "." + key + ": " + e.what());
    }
}

DistributionPtr from_json_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    if (j.contains("schema") && j.at("schema") != "gencalc.distribution/1")
        throw SchemaError(path + ".schema: unsupported schema");
    const auto kind = field<std::string>(j, "kind", path);
    const int dim = j.contains("dimension") ? field<int>(j, "dimension", path) : 1;
    if (dim < 1 || dim > defaults::max_dimension) throw SchemaError(path + ".dimension: out of range");
    try {
        if (kind == "delta") {
            std::vector<double> p = j.contains("point") ? field<std::vector<double>>(j, "point", path)
                                                        : std::vector<double>(static_cast<std::size_t>(dim), 0.0);
            if (static_cast<int>(p.size()) != dim) throw SchemaError(path + ".point: length must equal dimension");
            return DistributionSpec::delta(std::move(p));
        }
        if (kind == "heaviside") {
            return DistributionSpec::heaviside(dim, j.contains("axis") ? field<int>(j, "axis", path) : 0,
                                               j.contains("threshold") ? field<double>(j, "threshold", path) : 0.0);
        }
        if (kind == "vp") {
            if (dim != 1) throw SchemaError(path + ".dimension: vp is one-dimensional");
            return DistributionSpec::vp();
        }
        if (kind == "regular") {
            if (!j.contains("expression")) throw SchemaError(path + ".expression: missing");
            const auto& ex = j.at("expression");
            NetExpr f;
            if (ex.is_string()) {
                std::map<std::string, int> vars;
                if (j.contains("variables")) {
                    auto names = field<std::vector<std::string>>(j, "variables", path);
                    for (std::size_t i = 0; i < names.size(); ++i) vars[names[i]] = static_cast<int>(i);
                } else {
                    const char* names[] = {"x", "y", "z", "w"};
                    for (int i = 0; i < dim; ++i) {
                        vars[names[i]] = i;
                        vars["x" + std::to_string(i)] = i;
                    }
                }
                f = parse_expression(ex.get<std::string>(), vars);
            } else {
                f = net_from_json(ex);
            }
            std::vector<std::vector<double>> bp;
            if (j.contains("breakpoints")) {
                const auto& b = j.at("breakpoints");
                if (!b.is_array()) throw SchemaError(path + ".breakpoints: expected an array");
                if (!b.empty() && b[0].is_number()) bp = {b.get<std::vector<double>>()};
                else bp = b.get<std::vector<std::vector<double>>>();
            }
            return DistributionSpec::regular(f, dim, bp);
        }
        if (kind == "derivative") {
            if (!j.contains("of")) throw SchemaError(path + ".of: missing");
            return DistributionSpec::derivative(from_json_at(j.at("of"), path + ".of"),
                                                j.contains("axis") ? field<int>(j, "axis", path) : 0);
        }
        if (kind == "combination") {
            if (!j.contains("terms") || !j.at("terms").is_array()) throw SchemaError(path + ".terms: expected an array");
            std::vector<std::pair<double, DistributionPtr>> terms;
            const auto& arr = j.at("terms");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string p = path + ".terms[" + std::to_string(i) + "]";
                terms.emplace_back(field<double>(arr[i], "coefficient", p), from_json_at(arr[i].at("spec"), p + ".spec"));
            }
            return DistributionSpec::combination(std::move(terms));
        }
    } catch (const ArgumentError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    throw SchemaError(path + ".kind: unknown distribution kind '" + kind + "'");
}

}  // namespace

std::vector<NetExpr> DistributionSpec::axis_derivatives(int axis, int count) const {
    if (kind_ != DistributionKind::regular) throw PreconditionError("axis derivatives need a regular distribution");
    std::lock_guard lock(cache_mutex_);
    if (derivative_cache_.empty()) derivative_cache_.resize(static_cast<std::size_t>(dimension_));
    auto& c = derivative_cache_.at(static_cast<std::size_t>(axis));
    if (c.empty()) c.push_back(expression_);
    while (static_cast<int>(c.size()) < count) c.push_back(derive(c.back(), axis));
    return {c.begin(), c.begin() + count};
}

const char* to_string(DistributionKind k) {
    switch (k) {
        case DistributionKind::delta: return "delta";
        case DistributionKind::heaviside: return "heaviside";
        case DistributionKind::vp: return "vp";
        case DistributionKind::regular: return "regular";
        case DistributionKind::derivative: return "derivative";
        case DistributionKind::combination: return "combination";
    }
    return "unknown";
}

double Probe::value(std::span<const double> y) const {
    double v = amplitude;
    for (std::size_t a = 0; a < factors.size() && v != 0.0; ++a)
        v *= factors[a].profile->derivative(factors[a].order, y[a]);
    return v;
}

double Probe::lower(int axis) const { return factors.at(static_cast<std::size_t>(axis)).profile->lower(); }
double Probe::upper(int axis) const { return factors.at(static_cast<std::size_t>(axis)).profile->upper(); }

DistributionPtr DistributionSpec::delta(std::vector<double> point) {
    if (point.empty() || static_cast<int>(point.size()) > defaults::max_dimension)
        throw ArgumentError("delta point dimension out of range");
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::delta;
    d->dimension_ = static_cast<int>(point.size());
    d->point_ = std::move(point);
    d->finalize();
    return d;
}

DistributionPtr DistributionSpec::heaviside(int dimension, int axis, double threshold) {
    if (dimension < 1 || dimension > defaults::max_dimension) throw ArgumentError("dimension out of range");
    if (axis < 0 || axis >= dimension) throw ArgumentError("heaviside axis outside the dimension");
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::heaviside;
    d->dimension_ = dimension;
    d->axis_ = axis;
    d->threshold_ = threshold;
    d->finalize();
    return d;
}

DistributionPtr DistributionSpec::vp() {
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::vp;
    d->dimension_ = 1;
    d->finalize();
    return d;
}

DistributionPtr DistributionSpec::regular(NetExpr f, int dimension, std::vector<std::vector<double>> breakpoints) {
    if (dimension < 1 || dimension > defaults::max_dimension) throw ArgumentError("dimension out of range");
    if (f.node().dimension > dimension) throw ArgumentError("regular expression uses more axes than the dimension");
    if (depends_on_epsilon(f) || contains_embedded(f))
        throw ArgumentError("regular distribution must be an epsilon-independent function");
    if (breakpoints.size() > static_cast<std::size_t>(dimension))
        throw ArgumentError("breakpoints given for more axes than the dimension");
    breakpoints.resize(static_cast<std::size_t>(dimension));
    detect_kinks(f, breakpoints);
    for (auto& b : breakpoints) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::regular;
    d->dimension_ = dimension;
    d->expression_ = std::move(f);
    d->breakpoints_ = std::move(breakpoints);
    d->finalize();
    return d;
}

DistributionPtr DistributionSpec::derivative(DistributionPtr of, int axis) {
    if (!of) throw ArgumentError("derivative of a null distribution");
    if (axis < 0 || axis >= of->dimension()) throw ArgumentError("derivative axis outside the dimension");
    if (of->derivative_depth() + 1 > defaults::distribution_derivative_depth)
        throw ArgumentError("distribution derivative nesting exceeds depth " +
                            std::to_string(defaults::distribution_derivative_depth));
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::derivative;
    d->dimension_ = of->dimension();
    d->axis_ = axis;
    d->depth_ = of->derivative_depth() + 1;
    d->operand_ = std::move(of);
    d->finalize();
    return d;
}

DistributionPtr DistributionSpec::combination(std::vector<std::pair<double, DistributionPtr>> terms) {
    if (terms.empty()) throw ArgumentError("linear combination needs at least one term");
    auto d = std::shared_ptr<DistributionSpec>(new DistributionSpec());
    d->kind_ = DistributionKind::combination;
    d->dimension_ = terms.front().second->dimension();
    for (const auto& [c, u] : terms) {
        if (!u) throw ArgumentError("null distribution in combination");
        if (u->dimension() != d->dimension_) throw ArgumentError("combination terms differ in dimension");
        if (!std::isfinite(c)) throw ArgumentError("combination coefficient must be finite");
        d->depth_ = std::max(d->depth_, u->derivative_depth());
    }
    d->terms_ = std::move(terms);
    d->finalize();
    return d;
}

void DistributionSpec::finalize() {
    hash_ = mix(std::hash<std::string>{}(to_json(*this).dump()), static_cast<std::size_t>(dimension_));
}

double DistributionSpec::pair(const Probe& g) const {
    if (g.dimension() != dimension_) throw ArgumentError("probe dimension does not match the distribution");
    switch (kind_) {
        case DistributionKind::delta: return g.value(point_);
        case DistributionKind::heaviside: {
            double v = g.amplitude;
            for (int a = 0; a < dimension_ && v != 0.0; ++a) {
                const auto& f = g.factors[static_cast<std::size_t>(a)];
                if (a != axis_) {
                    v *= f.order == 0 ? f.profile->mass() : 0.0;
                } else if (f.order == 0) {
                    v *= f.profile->mass() - f.profile->cdf(threshold_);
                } else {
                    // ∫_c^∞ g^(k) = −g^(k−1)(c)
                    v *= -f.profile->derivative(f.order - 1, threshold_);
                }
            }
            return v;
        }
        case DistributionKind::vp: return pair_vp(g);
        case DistributionKind::regular: return pair_regular(*this, g);
        case DistributionKind::derivative: {
            Probe h = g;
            ++h.factors[static_cast<std::size_t>(axis_)].order;
            return -operand_->pair(h);
        }
        case DistributionKind::combination: {
            double s = 0.0;
            for (const auto& [c, u] : terms_)
                if (c != 0.0) s += c * u->pair(g);
            return s;
        }
    }
    return 0.0;
}

void DistributionSpec::singular_points(int axis, std::vector<double>& out) const {
    switch (kind_) {
        case DistributionKind::delta: out.push_back(point_[static_cast<std::size_t>(axis)]); break;
        case DistributionKind::heaviside:
            if (axis == axis_) out.push_back(threshold_);
            break;
        case DistributionKind::vp: out.push_back(0.0); break;
        case DistributionKind::regular:
            for (double b : breakpoints_[static_cast<std::size_t>(axis)]) out.push_back(b);
            break;
        case DistributionKind::derivative: operand_->singular_points(axis, out); break;
        case DistributionKind::combination:
            for (const auto& t : terms_) t.second->singular_points(axis, out);
            break;
    }
}

double pairing(const DistributionSpec& u, const TestFunction& psi) {
    Probe g;
    for (const auto& f : psi.factors()) g.factors.push_back({&f, 0});
    return u.pair(g);
}

double vp_pairing(const TestFunction& psi) {
    if (psi.dimension() != 1) throw ArgumentError("vp pairing needs a one-dimensional test function");
    try {
        return pairing(*DistributionSpec::vp(), psi);
    } catch (const QuadratureError& e) {
        throw EvaluationError(e.what(), "vp");
    }
}

nlohmann::json to_json(const DistributionSpec& u) {
    nlohmann::json j;
    j["schema"] = "gencalc.distribution/1";
    j["kind"] = to_string(u.kind());
    j["dimension"] = u.dimension();
    switch (u.kind()) {
        case DistributionKind::delta: j["point"] = u.point(); break;
        case DistributionKind::heaviside:
            j["axis"] = u.axis();
            j["threshold"] = u.threshold();
            break;
        case DistributionKind::vp: break;
        case DistributionKind::regular:
            j["expression"] = to_json(u.expression());
            j["breakpoints"] = u.breakpoints();
            break;
        case DistributionKind::derivative:
            j["axis"] = u.axis();
            j["of"] = to_json(*u.operand());
            break;
        case DistributionKind::combination:
            j["terms"] = nlohmann::json::array();
            for (const auto& [c, v] : u.terms()) j["terms"].push_back({{"coefficient", c}, {"spec", to_json(*v)}});
            break;
    }
    return j;
}

DistributionPtr distribution_from_json(const nlohmann::json& j) { return from_json_at(j, "$"); }

}  // namespace gencalc
