#include "gencalc/netexpr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "gencalc/defaults.hpp"
#include "gencalc/error.hpp"
#include "gencalc/mollifier.hpp"

namespace gencalc {
namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_double(double d) { return std::hash<double>{}(d); }

std::size_t profile_hash(const BumpPolynomial& p) {
    std::size_t h = mix(hash_double(p.center()), hash_double(p.radius()));
    for (double c : p.coefficients()) h = mix(h, hash_double(c));
    return h;
}

NodePtr finish(Node n) {
    std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
    h = mix(h, hash_double(n.value));
    h = mix(h, std::hash<int>{}(n.axis));
    h = mix(h, std::hash<int>{}(n.order));
    int dim = 0;
    for (const auto& c : n.children) {
        h = mix(h, c->hash);
        dim = std::max(dim, c->dimension);
    }
    if (n.profile) h = mix(h, profile_hash(*n.profile));
    if (n.distribution) h = mix(h, detail::distribution_hash(*n.distribution));
    if (n.kernel) h = mix(h, detail::kernel_hash(*n.kernel));
    for (int b : n.derivative) h = mix(h, std::hash<int>{}(b));
    for (int a : n.axes) {
        h = mix(h, std::hash<int>{}(a));
        dim = std::max(dim, a + 1);
    }
    if (n.kind == NodeKind::coordinate || n.kind == NodeKind::scaled_kernel) dim = std::max(dim, n.axis + 1);
    n.hash = h;
    n.dimension = dim;
    return std::make_shared<const Node>(std::move(n));
}

NodePtr constant_node(double c) {
    Node n;
    n.kind = NodeKind::constant;
    n.value = c == 0.0 ? 0.0 : c;  // normalize -0
    return finish(std::move(n));
}

NodePtr unary_node(NodeKind k, NodePtr a) {
    Node n;
    n.kind = k;
    n.children = {std::move(a)};
    return finish(std::move(n));
}

NodePtr binary_node(NodeKind k, NodePtr a, NodePtr b) {
    Node n;
    n.kind = k;
    n.children = {std::move(a), std::move(b)};
    return finish(std::move(n));
}

std::vector<Interval> merge_domains(const std::vector<Interval>& a, const std::vector<Interval>& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    std::vector<Interval> out(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i >= a.size()) {
            out[i] = b[i];
        } else if (i >= b.size()) {
            out[i] = a[i];
        } else {
            out[i] = {std::max(a[i].lo, b[i].lo), std::min(a[i].hi, b[i].hi)};
            if (!(out[i].lo < out[i].hi)) throw ArgumentError("net domains do not intersect");
        }
    }
    return out;
}

bool is_const(const NodePtr& n, double v) { return n->kind == NodeKind::constant && n->value == v; }

// Node-level builders (constant folding, neutral elements).
NodePtr n_sum(std::vector<NodePtr> terms) {
    std::vector<NodePtr> flat;
    double c = 0.0;
    std::function<void(const NodePtr&)> add = [&](const NodePtr& t) {
        if (t->kind == NodeKind::constant) {
            c += t->value;
        } else if (t->kind == NodeKind::sum) {
            for (const auto& ch : t->children) add(ch);
        } else {
            flat.push_back(t);
        }
    };
    for (const auto& t : terms) add(t);
    if (c != 0.0) flat.push_back(constant_node(c));
    if (flat.empty()) return constant_node(0.0);
    if (flat.size() == 1) return flat.front();
    Node n;
    n.kind = NodeKind::sum;
    n.children = std::move(flat);
    return finish(std::move(n));
}

NodePtr n_mul(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant) return constant_node(a->value * b->value);
    if (b->kind == NodeKind::constant) std::swap(a, b);
    if (is_const(a, 0.0)) return constant_node(0.0);
    if (is_const(a, 1.0)) return b;
    if (a->kind == NodeKind::constant && b->kind == NodeKind::product &&
        b->children[0]->kind == NodeKind::constant)
        return n_mul(constant_node(a->value * b->children[0]->value), b->children[1]);
    return binary_node(NodeKind::product, std::move(a), std::move(b));
}

NodePtr n_div(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant && b->value != 0.0)
        return constant_node(a->value / b->value);
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant_node(0.0);
    return binary_node(NodeKind::quotient, std::move(a), std::move(b));
}

NodePtr n_pow(NodePtr a, int k) {
    if (k == 0) return constant_node(1.0);
    if (k == 1) return a;
    if (a->kind == NodeKind::constant && (a->value != 0.0 || k > 0)) return constant_node(std::pow(a->value, k));
    Node n;
    n.kind = NodeKind::power;
    n.order = k;
    n.children = {std::move(a)};
    return finish(std::move(n));
}

NodePtr n_unary(NodeKind k, NodePtr a) {
    if (a->kind == NodeKind::constant) {
        const double v = a->value;
        switch (k) {
            case NodeKind::exp: return constant_node(std::exp(v));
            case NodeKind::sin: return constant_node(std::sin(v));
            case NodeKind::cos: return constant_node(std::cos(v));
            case NodeKind::log:
                if (v > 0.0) return constant_node(std::log(v));
                break;
            case NodeKind::abs: return constant_node(std::abs(v));
            case NodeKind::sign: return constant_node(v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
            default: break;
        }
    }
    return unary_node(k, std::move(a));
}

NodePtr n_test_function(std::shared_ptr<const BumpPolynomial> p, NodePtr arg, int order) {
    if (order >= 24) throw ArgumentError("test function derivative order exceeds the supported table");
    if (arg->kind == NodeKind::constant) return constant_node(p->derivative(order, arg->value));
    Node n;
    n.kind = NodeKind::test_function;
    n.order = order;
    n.profile = std::move(p);
    n.children = {std::move(arg)};
    return finish(std::move(n));
}

NodePtr n_scaled_kernel(std::shared_ptr<const BumpPolynomial> p, int axis, double center, int order) {
    if (order >= 24) throw ArgumentError("kernel derivative order exceeds the supported table");
    Node n;
    n.kind = NodeKind::scaled_kernel;
    n.profile = std::move(p);
    n.axis = axis;
    n.value = center;
    n.order = order;
    return finish(std::move(n));
}

double eval_node(const Node& n, double eps, std::span<const double> x);

constexpr const char* kOverflow = "overflow";

double eval_child(const Node& n, std::size_t i, double eps, std::span<const double> x) {
    try {
        return eval_node(*n.children[i], eps, x);
    } catch (const EvaluationError& e) {
        throw EvaluationError(e.message(), std::string(to_string(n.kind)) + "[" + std::to_string(i) + "]/" + e.path());
    }
}

double eval_node(const Node& n, double eps, std::span<const double> x) {
    double v = 0.0;
    switch (n.kind) {
        case NodeKind::constant: return n.value;
        case NodeKind::epsilon: return eps;
        case NodeKind::coordinate:
            if (static_cast<std::size_t>(n.axis) >= x.size()) throw ArgumentError("point has too few coordinates");
            return x[static_cast<std::size_t>(n.axis)];
        case NodeKind::sum:
            for (std::size_t i = 0; i < n.children.size(); ++i) v += eval_child(n, i, eps, x);
            break;
        case NodeKind::product: {
            const double a = eval_child(n, 0, eps, x);
            v = a == 0.0 ? 0.0 : a * eval_child(n, 1, eps, x);
            break;
        }
        case NodeKind::quotient: v = eval_child(n, 0, eps, x) / eval_child(n, 1, eps, x); break;
        case NodeKind::power: {
            const double a = eval_child(n, 0, eps, x);
            if (n.order > 0) {
                v = 1.0;
                for (int i = 0; i < n.order; ++i) v *= a;
            } else {
                v = std::pow(a, n.order);
            }
            break;
        }
        case NodeKind::exp: v = std::exp(eval_child(n, 0, eps, x)); break;
        case NodeKind::sin: v = std::sin(eval_child(n, 0, eps, x)); break;
        case NodeKind::cos: v = std::cos(eval_child(n, 0, eps, x)); break;
        case NodeKind::log: v = std::log(eval_child(n, 0, eps, x)); break;
        case NodeKind::abs: v = std::abs(eval_child(n, 0, eps, x)); break;
        case NodeKind::sign: {
            const double a = eval_child(n, 0, eps, x);
            v = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
            break;
        }
        case NodeKind::test_function: v = n.profile->derivative(n.order, eval_child(n, 0, eps, x)); break;
        case NodeKind::scaled_kernel: {
            if (static_cast<std::size_t>(n.axis) >= x.size()) throw ArgumentError("point has too few coordinates");
            const double t = (x[static_cast<std::size_t>(n.axis)] - n.value) / eps;
            const double d = n.profile->derivative(n.order, t);
            v = d == 0.0 ? 0.0 : d / std::pow(eps, 1 + n.order);
            break;
        }
        case NodeKind::embedded: v = detail::embedded_value(n, eps, x); break;
    }
    if (std::isnan(v)) throw EvaluationError("not a number", to_string(n.kind));
    if (std::isinf(v)) throw EvaluationError(kOverflow, to_string(n.kind));
    return v;
}

NodePtr derive_node(const NodePtr& p, int axis, std::unordered_map<const Node*, NodePtr>& memo) {
    if (auto it = memo.find(p.get()); it != memo.end()) return it->second;
    const Node& n = *p;
    auto d = [&](std::size_t i) { return derive_node(n.children[i], axis, memo); };
    NodePtr r;
    switch (n.kind) {
        case NodeKind::constant:
        case NodeKind::epsilon:
        case NodeKind::sign: r = constant_node(0.0); break;
        case NodeKind::coordinate: r = constant_node(n.axis == axis ? 1.0 : 0.0); break;
        case NodeKind::sum: {
            std::vector<NodePtr> t;
            for (std::size_t i = 0; i < n.children.size(); ++i) t.push_back(d(i));
            r = n_sum(std::move(t));
            break;
        }
        case NodeKind::product: {
            const auto& a = n.children[0];
            const auto& b = n.children[1];
            r = n_sum({n_mul(d(0), b), n_mul(a, d(1))});
            break;
        }
        case NodeKind::quotient: {
            const auto& a = n.children[0];
            const auto& b = n.children[1];
            auto num = n_sum({n_mul(d(0), b), n_mul(constant_node(-1.0), n_mul(a, d(1)))});
            r = n_div(num, n_pow(b, 2));
            break;
        }
        case NodeKind::power:
            r = n_mul(n_mul(constant_node(n.order), n_pow(n.children[0], n.order - 1)), d(0));
            break;
        case NodeKind::exp: r = n_mul(p, d(0)); break;
        case NodeKind::sin: r = n_mul(n_unary(NodeKind::cos, n.children[0]), d(0)); break;
        case NodeKind::cos:
            r = n_mul(constant_node(-1.0), n_mul(n_unary(NodeKind::sin, n.children[0]), d(0)));
            break;
        case NodeKind::log: r = n_div(d(0), n.children[0]); break;
        case NodeKind::abs: r = n_mul(n_unary(NodeKind::sign, n.children[0]), d(0)); break;
        case NodeKind::test_function:
            r = n_mul(n_test_function(n.profile, n.children[0], n.order + 1), d(0));
            break;
        case NodeKind::scaled_kernel:
            r = n.axis == axis ? n_scaled_kernel(n.profile, n.axis, n.value, n.order + 1) : constant_node(0.0);
            break;
        case NodeKind::embedded: {
            auto pos = std::find(n.axes.begin(), n.axes.end(), axis);
            if (pos == n.axes.end()) {
                r = constant_node(0.0);
            } else {
                auto beta = n.derivative;
                ++beta[static_cast<std::size_t>(pos - n.axes.begin())];
                r = make_embedded(n.distribution, n.kernel, beta, n.axes).root();
            }
            break;
        }
    }
    memo.emplace(p.get(), r);
    return r;
}

NodePtr restrict_node(const NodePtr& p, int free_axis, std::span<const double> point,
                      std::unordered_map<const Node*, NodePtr>& memo) {
    if (auto it = memo.find(p.get()); it != memo.end()) return it->second;
    const Node& n = *p;
    NodePtr r;
    switch (n.kind) {
        case NodeKind::coordinate:
            if (n.axis == free_axis) {
                Node c;
                c.kind = NodeKind::coordinate;
                c.axis = 0;
                r = finish(std::move(c));
            } else {
                r = constant_node(point[static_cast<std::size_t>(n.axis)]);
            }
            break;
        case NodeKind::scaled_kernel:
            if (n.axis == free_axis) {
                r = n_scaled_kernel(n.profile, 0, n.value, n.order);
            } else {
                // ε^{-1-k} φ^(k)((p − c)/ε) with p fixed.
                Node eps;
                eps.kind = NodeKind::epsilon;
                auto e = finish(std::move(eps));
                auto arg = n_div(constant_node(point[static_cast<std::size_t>(n.axis)] - n.value), e);
                r = n_mul(n_pow(e, -1 - n.order), n_test_function(n.profile, arg, n.order));
            }
            break;
        case NodeKind::embedded: {
            std::vector<int> axes;
            for (int a : n.axes) {
                if (a != free_axis) throw ArgumentError("cannot restrict an embedded distribution along a fixed axis");
                axes.push_back(0);
            }
            r = make_embedded(n.distribution, n.kernel, n.derivative, axes).root();
            break;
        }
        default: {
            if (n.children.empty()) {
                r = p;
                break;
            }
            Node c = n;
            for (auto& ch : c.children) ch = restrict_node(ch, free_axis, point, memo);
            switch (n.kind) {
                case NodeKind::sum: r = n_sum(c.children); break;
                case NodeKind::product: r = n_mul(c.children[0], c.children[1]); break;
                case NodeKind::quotient: r = n_div(c.children[0], c.children[1]); break;
                case NodeKind::power: r = n_pow(c.children[0], n.order); break;
                case NodeKind::test_function: r = n_test_function(n.profile, c.children[0], n.order); break;
                default: r = n_unary(n.kind, c.children[0]); break;
            }
        }
    }
    memo.emplace(p.get(), r);
    return r;
}

NodePtr substitute_node(const NodePtr& p, int axis, const NodePtr& rep,
                        std::unordered_map<const Node*, NodePtr>& memo) {
    if (auto it = memo.find(p.get()); it != memo.end()) return it->second;
    const Node& n = *p;
    NodePtr r;
    if (n.kind == NodeKind::coordinate && n.axis == axis) {
        r = rep;
    } else if ((n.kind == NodeKind::scaled_kernel && n.axis == axis) ||
               (n.kind == NodeKind::embedded && std::find(n.axes.begin(), n.axes.end(), axis) != n.axes.end())) {
        throw ArgumentError("cannot substitute an axis that a kernel or embedded node varies along");
    } else if (n.children.empty()) {
        r = p;
    } else {
        Node c = n;
        for (auto& ch : c.children) ch = substitute_node(ch, axis, rep, memo);
        switch (n.kind) {
            case NodeKind::sum: r = n_sum(c.children); break;
            case NodeKind::product: r = n_mul(c.children[0], c.children[1]); break;
            case NodeKind::quotient: r = n_div(c.children[0], c.children[1]); break;
            case NodeKind::power: r = n_pow(c.children[0], n.order); break;
            case NodeKind::test_function: r = n_test_function(n.profile, c.children[0], n.order); break;
            default: r = n_unary(n.kind, c.children[0]); break;
        }
    }
    memo.emplace(p.get(), r);
    return r;
}

template <class F>
void visit(const NodePtr& root, F&& f) {
    std::unordered_set<const Node*> seen;
    std::vector<const Node*> stack{root.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        f(*n);
        for (const auto& c : n->children) stack.push_back(c.get());
    }
}

bool equal_nodes(const Node& a, const Node& b) {
    if (&a == &b) return true;
    if (a.hash != b.hash || a.kind != b.kind || a.value != b.value || a.axis != b.axis || a.order != b.order ||
        a.derivative != b.derivative || a.axes != b.axes || a.children.size() != b.children.size())
        return false;
    if ((a.profile == nullptr) != (b.profile == nullptr)) return false;
    if (a.profile && (a.profile->coefficients() != b.profile->coefficients() ||
                      a.profile->center() != b.profile->center() || a.profile->radius() != b.profile->radius()))
        return false;
    if ((a.distribution == nullptr) != (b.distribution == nullptr)) return false;
    if (a.distribution && !detail::same_distribution(*a.distribution, *b.distribution)) return false;
    if ((a.kernel == nullptr) != (b.kernel == nullptr)) return false;
    if (a.kernel && detail::kernel_hash(*a.kernel) != detail::kernel_hash(*b.kernel)) return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!equal_nodes(*a.children[i], *b.children[i])) return false;
    return true;
}

nlohmann::json profile_json(const BumpPolynomial& p) {
    return {{"support_radius", p.radius()}, {"center", p.center()}, {"polynomial_coefficients", p.coefficients()}};
}

nlohmann::json node_json(const Node& n) {
    nlohmann::json j;
    j["kind"] = to_string(n.kind);
    switch (n.kind) {
        case NodeKind::constant: j["value"] = n.value; break;
        case NodeKind::coordinate: j["axis"] = n.axis; break;
        case NodeKind::power: j["exponent"] = n.order; break;
        case NodeKind::test_function:
            j["order"] = n.order;
            j["profile"] = profile_json(*n.profile);
            break;
        case NodeKind::scaled_kernel:
            j["axis"] = n.axis;
            j["center"] = n.value;
            j["order"] = n.order;
            j["profile"] = profile_json(*n.profile);
            break;
        case NodeKind::embedded: return detail::embedded_to_json(n);
        default: break;
    }
    if (!n.children.empty()) {
        j["children"] = nlohmann::json::array();
        for (const auto& c : n.children) j["children"].push_back(node_json(*c));
    }
    return j;
}

NodeKind kind_from_string(const std::string& s, const std::string& path) {
    static const std::pair<const char*, NodeKind> table[] = {
        {"constant", NodeKind::constant},   {"coordinate", NodeKind::coordinate},
        {"epsilon", NodeKind::epsilon},     {"sum", NodeKind::sum},
        {"product", NodeKind::product},     {"quotient", NodeKind::quotient},
        {"power", NodeKind::power},         {"exp", NodeKind::exp},
        {"sin", NodeKind::sin},             {"cos", NodeKind::cos},
        {"log", NodeKind::log},             {"abs", NodeKind::abs},
        {"sign", NodeKind::sign},           {"test_function", NodeKind::test_function},
        {"scaled_kernel", NodeKind::scaled_kernel}, {"embedded", NodeKind::embedded}};
    for (const auto& [name, k] : table)
        if (s == name) return k;
    throw SchemaError(path + ".kind: unknown node kind '" + s + "'");
}

template <class T>
T get(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + "." + key + ": " + e.what());
    }
}

std::shared_ptr<const BumpPolynomial> profile_from_json(const nlohmann::json& j, const std::string& path) {
    const double center = j.contains("center") ? get<double>(j, "center", path) : 0.0;
    return std::make_shared<const BumpPolynomial>(center, get<double>(j, "support_radius", path),
                                                  get<std::vector<double>>(j, "polynomial_coefficients", path));
}

NodePtr node_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    const NodeKind k = kind_from_string(get<std::string>(j, "kind", path), path);
    std::vector<NodePtr> ch;
    if (j.contains("children")) {
        const auto& arr = j.at("children");
        if (!arr.is_array()) throw SchemaError(path + ".children: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            ch.push_back(node_from_json(arr[i], path + ".children[" + std::to_string(i) + "]"));
    }
    auto need = [&](std::size_t count) {
        if (ch.size() != count)
            throw SchemaError(path + ".children: expected " + std::to_string(count) + " entries");
    };
    switch (k) {
        case NodeKind::constant: return constant_node(get<double>(j, "value", path));
        case NodeKind::coordinate: {
            const int axis = get<int>(j, "axis", path);
            if (axis < 0) throw SchemaError(path + ".axis: must be non-negative");
            return NetExpr::coordinate(axis).root();
        }
        case NodeKind::epsilon: return NetExpr::epsilon().root();
        case NodeKind::sum:
            if (ch.empty()) throw SchemaError(path + ".children: sum needs at least one term");
            return n_sum(ch);
        case NodeKind::product: need(2); return n_mul(ch[0], ch[1]);
        case NodeKind::quotient: need(2); return n_div(ch[0], ch[1]);
        case NodeKind::power: need(1); return n_pow(ch[0], get<int>(j, "exponent", path));
        case NodeKind::test_function:
            need(1);
            return n_test_function(profile_from_json(j.at("profile"), path + ".profile"), ch[0],
                                   j.contains("order") ? get<int>(j, "order", path) : 0);
        case NodeKind::scaled_kernel:
            return n_scaled_kernel(profile_from_json(j.at("profile"), path + ".profile"), get<int>(j, "axis", path),
                                   j.contains("center") ? get<double>(j, "center", path) : 0.0,
                                   j.contains("order") ? get<int>(j, "order", path) : 0);
        case NodeKind::embedded: return detail::embedded_from_json(j, path).root();
        default: need(1); return n_unary(k, ch[0]);
    }
}

}  // namespace

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::constant: return "constant";
        case NodeKind::coordinate: return "coordinate";
        case NodeKind::epsilon: return "epsilon";
        case NodeKind::sum: return "sum";
        case NodeKind::product: return "product";
        case NodeKind::quotient: return "quotient";
        case NodeKind::power: return "power";
        case NodeKind::exp: return "exp";
        case NodeKind::sin: return "sin";
        case NodeKind::cos: return "cos";
        case NodeKind::log: return "log";
        case NodeKind::abs: return "abs";
        case NodeKind::sign: return "sign";
        case NodeKind::test_function: return "test_function";
        case NodeKind::scaled_kernel: return "scaled_kernel";
        case NodeKind::embedded: return "embedded";
    }
    return "unknown";
}

NetExpr::NetExpr() : root_(constant_node(0.0)) {}

NetExpr::NetExpr(NodePtr root, std::vector<Interval> domain) : root_(std::move(root)), domain_(std::move(domain)) {
    if (!root_) throw ArgumentError("null expression node");
    for (const auto& iv : domain_)
        if (!(iv.lo < iv.hi)) throw ArgumentError("net domain must be a nonempty open box");
}

NetExpr NetExpr::constant(double c) { return NetExpr(constant_node(c)); }

NetExpr NetExpr::coordinate(int axis) {
    if (axis < 0) throw ArgumentError("coordinate axis must be non-negative");
    Node n;
    n.kind = NodeKind::coordinate;
    n.axis = axis;
    return NetExpr(finish(std::move(n)));
}

NetExpr NetExpr::epsilon() {
    Node n;
    n.kind = NodeKind::epsilon;
    return NetExpr(finish(std::move(n)));
}

int NetExpr::dimension() const noexcept {
    return std::max(root_->dimension, static_cast<int>(domain_.size()));
}

NetExpr NetExpr::with_domain(std::vector<Interval> domain) const { return NetExpr(root_, std::move(domain)); }

NetExpr operator+(const NetExpr& a, const NetExpr& b) {
    return NetExpr(n_sum({a.root(), b.root()}), merge_domains(a.domain(), b.domain()));
}

NetExpr operator-(const NetExpr& a) { return NetExpr(n_mul(constant_node(-1.0), a.root()), a.domain()); }

NetExpr operator-(const NetExpr& a, const NetExpr& b) { return a + (-b); }

NetExpr operator*(const NetExpr& a, const NetExpr& b) {
    return NetExpr(n_mul(a.root(), b.root()), merge_domains(a.domain(), b.domain()));
}

NetExpr operator/(const NetExpr& a, const NetExpr& b) {
    return NetExpr(n_div(a.root(), b.root()), merge_domains(a.domain(), b.domain()));
}

NetExpr operator*(double c, const NetExpr& a) { return NetExpr::constant(c) * a; }
NetExpr operator+(double c, const NetExpr& a) { return NetExpr::constant(c) + a; }

NetExpr sum(std::span<const NetExpr> terms) {
    std::vector<NodePtr> t;
    std::vector<Interval> dom;
    for (const auto& e : terms) {
        t.push_back(e.root());
        dom = merge_domains(dom, e.domain());
    }
    return NetExpr(n_sum(std::move(t)), dom);
}

NetExpr pow(const NetExpr& a, int n) { return NetExpr(n_pow(a.root(), n), a.domain()); }
NetExpr exp(const NetExpr& a) { return NetExpr(n_unary(NodeKind::exp, a.root()), a.domain()); }
NetExpr sin(const NetExpr& a) { return NetExpr(n_unary(NodeKind::sin, a.root()), a.domain()); }
NetExpr cos(const NetExpr& a) { return NetExpr(n_unary(NodeKind::cos, a.root()), a.domain()); }
NetExpr log(const NetExpr& a) { return NetExpr(n_unary(NodeKind::log, a.root()), a.domain()); }
NetExpr abs(const NetExpr& a) { return NetExpr(n_unary(NodeKind::abs, a.root()), a.domain()); }
NetExpr sign(const NetExpr& a) { return NetExpr(n_unary(NodeKind::sign, a.root()), a.domain()); }

NetExpr compose_test_function(const BumpPolynomial& profile, const NetExpr& arg, int order) {
    return NetExpr(n_test_function(std::make_shared<const BumpPolynomial>(profile), arg.root(), order), arg.domain());
}

NetExpr scaled_kernel(const BumpPolynomial& profile, int axis, double center, int order) {
    if (axis < 0) throw ArgumentError("kernel axis must be non-negative");
    return NetExpr(n_scaled_kernel(std::make_shared<const BumpPolynomial>(profile), axis, center, order));
}

NetExpr make_embedded(std::shared_ptr<const DistributionSpec> u, std::shared_ptr<const SmoothingKernelNet> kernel,
                      std::vector<int> derivative, std::vector<int> axes) {
    if (!u || !kernel) throw ArgumentError("embedded node needs a distribution and a kernel");
    if (derivative.size() != axes.size()) throw ArgumentError("embedded node: derivative/axes size mismatch");
    int total = 0;
    for (int b : derivative) {
        if (b < 0) throw ArgumentError("derivative orders must be non-negative");
        total += b;
    }
    if (total >= 20) throw ArgumentError("embedded derivative order exceeds the supported table");
    Node n;
    n.kind = NodeKind::embedded;
    n.distribution = std::move(u);
    n.kernel = std::move(kernel);
    n.derivative = std::move(derivative);
    n.axes = std::move(axes);
    return NetExpr(finish(std::move(n)));
}

double eval(const NetExpr& e, double eps, std::span<const double> x) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("epsilon must lie in (0, 1]");
    const auto& dom = e.domain();
    if (!dom.empty()) {
        if (x.size() < dom.size()) throw DomainError("point has fewer coordinates than the net domain");
        for (std::size_t i = 0; i < dom.size(); ++i)
            if (!(x[i] > dom[i].lo && x[i] < dom[i].hi))
                throw DomainError("coordinate " + std::to_string(i) + " = " + std::to_string(x[i]) +
                                  " outside the net domain");
    }
    return eval_node(e.node(), eps, x);
}

NetExpr derive(const NetExpr& e, int axis) {
    if (axis < 0) throw ArgumentError("derivative axis must be non-negative");
    std::unordered_map<const Node*, NodePtr> memo;
    return NetExpr(derive_node(e.root(), axis, memo), e.domain());
}

NetExpr derive(const NetExpr& e, std::span<const int> alpha) {
    NetExpr r = e;
    for (std::size_t a = 0; a < alpha.size(); ++a)
        for (int k = 0; k < alpha[a]; ++k) r = derive(r, static_cast<int>(a));
    return r;
}

std::vector<std::vector<int>> multiindices(int dim, int order) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= order; ++total) {
        std::function<void(int, int)> rec = [&](int axis, int left) {
            if (axis == dim - 1) {
                cur[static_cast<std::size_t>(axis)] = left;
                out.push_back(cur);
                return;
            }
            for (int k = left; k >= 0; --k) {
                cur[static_cast<std::size_t>(axis)] = k;
                rec(axis + 1, left - k);
            }
        };
        if (dim == 0) {
            if (total == 0) out.push_back({});
            continue;
        }
        rec(0, total);
    }
    return out;
}

Jet jet_eval(const NetExpr& e, double eps, std::span<const double> x, int order) {
    if (order < 0 || order > defaults::jet_order_cap)
        throw ArgumentError("jet order must lie in 0.." + std::to_string(defaults::jet_order_cap));
    const int dim = static_cast<int>(x.size());
    std::map<std::vector<int>, NetExpr> exprs;
    Jet jet;
    for (const auto& alpha : multiindices(dim, order)) {
        NetExpr d = e;
        auto first = std::find_if(alpha.begin(), alpha.end(), [](int v) { return v > 0; });
        if (first != alpha.end()) {
            auto parent = alpha;
            const auto axis = first - alpha.begin();
            --parent[static_cast<std::size_t>(axis)];
            d = derive(exprs.at(parent), static_cast<int>(axis));
        }
        exprs.emplace(alpha, d);
        jet.partials[alpha] = eval(d, eps, x);
    }
    jet.value = jet.partials.at(std::vector<int>(static_cast<std::size_t>(dim), 0));
    return jet;
}

std::vector<Feature> features(const NetExpr& e, double eps) {
    std::vector<Feature> out;
    visit(e.root(), [&](const Node& n) {
        if (n.kind == NodeKind::scaled_kernel) {
            out.push_back({n.axis, n.value + eps * n.profile->center(), eps * n.profile->radius()});
        } else if (n.kind == NodeKind::embedded) {
            detail::embedded_features(n, eps, out);
        }
    });
    std::sort(out.begin(), out.end(), [](const Feature& a, const Feature& b) {
        return std::tie(a.axis, a.center, a.half_width) < std::tie(b.axis, b.center, b.half_width);
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Feature& a, const Feature& b) {
                              return a.axis == b.axis && a.center == b.center && a.half_width == b.half_width;
                          }),
              out.end());
    return out;
}

bool contains_embedded(const NetExpr& e) {
    bool found = false;
    visit(e.root(), [&](const Node& n) {
        if (n.kind == NodeKind::embedded || n.kind == NodeKind::scaled_kernel) found = true;
    });
    return found;
}

bool depends_on_epsilon(const NetExpr& e) {
    bool found = false;
    visit(e.root(), [&](const Node& n) {
        if (n.kind == NodeKind::epsilon || n.kind == NodeKind::embedded || n.kind == NodeKind::scaled_kernel)
            found = true;
    });
    return found;
}

bool depends_on_axis(const NetExpr& e, int axis) {
    bool found = false;
    visit(e.root(), [&](const Node& n) {
        if ((n.kind == NodeKind::coordinate || n.kind == NodeKind::scaled_kernel) && n.axis == axis) found = true;
        if (n.kind == NodeKind::embedded && std::find(n.axes.begin(), n.axes.end(), axis) != n.axes.end())
            found = true;
    });
    return found;
}

bool structurally_equal(const NetExpr& a, const NetExpr& b) { return equal_nodes(a.node(), b.node()); }

NetExpr restrict_to_axis(const NetExpr& e, int free_axis, std::span<const double> point) {
    if (free_axis < 0 || static_cast<std::size_t>(free_axis) >= point.size())
        throw ArgumentError("free axis outside the point dimension");
    if (static_cast<int>(point.size()) < e.node().dimension)
        throw ArgumentError("restriction point has too few coordinates");
    std::unordered_map<const Node*, NodePtr> memo;
    std::vector<Interval> dom;
    if (static_cast<std::size_t>(free_axis) < e.domain().size()) dom = {e.domain()[static_cast<std::size_t>(free_axis)]};
    return NetExpr(restrict_node(e.root(), free_axis, point, memo), dom);
}

NetExpr substitute(const NetExpr& e, int axis, const NetExpr& replacement) {
    std::unordered_map<const Node*, NodePtr> memo;
    auto dom = replacement.domain().empty() ? e.domain() : replacement.domain();
    return NetExpr(substitute_node(e.root(), axis, replacement.root(), memo), dom);
}

nlohmann::json to_json(const NetExpr& e) {
    nlohmann::json j;
    j["schema"] = "gencalc.net/1";
    j["dimension"] = e.dimension();
    if (!e.domain().empty()) {
        j["domain"] = nlohmann::json::array();
        for (const auto& iv : e.domain()) j["domain"].push_back({iv.lo, iv.hi});
    }
    j["root"] = node_json(e.node());
    return j;
}

NetExpr net_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("$: expected an object");
    // A bare node is accepted as well as the wrapped document.
    if (!j.contains("root")) return NetExpr(node_from_json(j, "$"));
    std::vector<Interval> dom;
    if (j.contains("domain") && !j.at("domain").is_null()) {
        const auto& d = j.at("domain");
        if (!d.is_array()) throw SchemaError("$.domain: expected an array of [lo, hi] pairs");
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!d[i].is_array() || d[i].size() != 2)
                throw SchemaError("$.domain[" + std::to_string(i) + "]: expected [lo, hi]");
            dom.push_back({d[i][0].get<double>(), d[i][1].get<double>()});
        }
    }
    return NetExpr(node_from_json(j.at("root"), "$.root"), dom);
}

}  // namespace gencalc
