#include "gencalc/embedding.hpp"

#include <numeric>

#include "gencalc/error.hpp"

namespace gencalc {

NetExpr embed_smooth(const NetExpr& f) {
    if (depends_on_epsilon(f) || contains_embedded(f))
        throw ArgumentError("embed_smooth expects an epsilon-independent expression");
    return f;
}

NetExpr embed_distribution(DistributionPtr u, std::shared_ptr<const SmoothingKernelNet> kernel) {
    if (!u || !kernel) throw ArgumentError("embedding needs a distribution and a kernel");
    if (u->dimension() != kernel->dimension())
        throw ArgumentError("kernel dimension " + std::to_string(kernel->dimension()) +
                            " does not match distribution dimension " + std::to_string(u->dimension()));
    std::vector<int> axes(static_cast<std::size_t>(u->dimension()));
    std::iota(axes.begin(), axes.end(), 0);
    std::vector<int> beta(axes.size(), 0);
    return make_embedded(std::move(u), std::move(kernel), std::move(beta), std::move(axes));
}

NetExpr embed_distribution(DistributionPtr u, const SmoothingKernelNet& kernel) {
    return embed_distribution(std::move(u), std::make_shared<const SmoothingKernelNet>(kernel));
}

namespace detail {

double embedded_value(const Node& n, double eps, std::span<const double> x) {
    const auto& k = *n.kernel;
    const auto& base = k.base();
    const std::size_t dim = n.axes.size();
    // ∂_x^β ψ⃗_ε(x)(y) = (−1)^|β| ∂_y^β ψ⃗_ε(x)(y)
    std::vector<BumpPolynomial> factors;
    factors.reserve(dim);
    int total = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        const auto axis = static_cast<std::size_t>(n.axes[i]);
        if (axis >= x.size()) throw ArgumentError("point has too few coordinates");
        const double amp = (i == 0 ? k.weight(eps) : 1.0) / eps;
        factors.push_back(base.factor(static_cast<int>(i)).rescaled(eps, x[axis], amp));
        total += n.derivative[i];
    }
    Probe g;
    g.amplitude = total % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < dim; ++i) g.factors.push_back({&factors[i], n.derivative[i]});
    try {
        return n.distribution->pair(g);
    } catch (const QuadratureError& e) {
        throw EvaluationError(e.what(), "embedded");
    }
}

void embedded_features(const Node& n, double eps, std::vector<Feature>& out) {
    const auto& base = n.kernel->base();
    for (std::size_t i = 0; i < n.axes.size(); ++i) {
        const auto& f = base.factor(static_cast<int>(i));
        std::vector<double> pts;
        n.distribution->singular_points(static_cast<int>(i), pts);
        for (double s : pts) out.push_back({n.axes[i], s - eps * f.center(), eps * f.radius()});
    }
}

nlohmann::json embedded_to_json(const Node& n) {
    return {{"kind", "embedded"},
            {"distribution", to_json(*n.distribution)},
            {"kernel", to_json(*n.kernel)},
            {"derivative", n.derivative},
            {"axes", n.axes}};
}

NetExpr embedded_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("distribution")) throw SchemaError(path + ".distribution: missing");
    if (!j.contains("kernel")) throw SchemaError(path + ".kernel: missing");
    DistributionPtr u;
    std::shared_ptr<const SmoothingKernelNet> k;
    try {
        u = distribution_from_json(j.at("distribution"));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ".distribution: " + e.what());
    }
    try {
        k = std::make_shared<const SmoothingKernelNet>(kernel_from_json(j.at("kernel")));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ".kernel: " + e.what());
    }
    NetExpr e = embed_distribution(u, k);
    if (!j.contains("derivative") && !j.contains("axes")) return e;
    try {
        auto beta = j.contains("derivative") ? j.at("derivative").get<std::vector<int>>()
                                             : std::vector<int>(static_cast<std::size_t>(u->dimension()), 0);
        auto axes = e.node().axes;
        if (j.contains("axes")) axes = j.at("axes").get<std::vector<int>>();
        if (beta.size() != static_cast<std::size_t>(u->dimension()) || axes.size() != beta.size())
            throw SchemaError(path + ".derivative: length must equal the distribution dimension");
        return make_embedded(u, k, beta, axes);
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(path + ": " + ex.what());
    } catch (const ArgumentError& ex) {
        throw SchemaError(path + ": " + ex.what());
    }
}

std::size_t distribution_hash(const DistributionSpec& u) { return u.hash(); }

std::size_t kernel_hash(const SmoothingKernelNet& k) { return std::hash<std::string>{}(to_json(k).dump()); }

bool same_distribution(const DistributionSpec& a, const DistributionSpec& b) {
    return &a == &b || (a.hash() == b.hash() && to_json(a) == to_json(b));
}

}  // namespace detail
}  // namespace gencalc
