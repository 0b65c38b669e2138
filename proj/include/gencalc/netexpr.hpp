#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gencalc {

class BumpPolynomial;
class DistributionSpec;
class SmoothingKernelNet;

enum class NodeKind {
    constant,
    coordinate,
    epsilon,
    sum,
    product,
    quotient,
    power,
    exp,
    sin,
    cos,
    log,
    abs,
    sign,
    /// φ^(order)(child), φ a one-dimensional BumpPolynomial.
    test_function,
    /// ε^{-1-order}·φ^(order)((x_axis − center)/ε): a strict delta net and its
    /// derivatives along one axis.
    scaled_kernel,
    /// ∂^β ⟨u, ψ⃗_ε(x)⟩ for a distribution u and smoothing kernel ψ⃗.
    embedded,
};

const char* to_string(NodeKind k);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression node. Build through the NetExpr factory functions,
/// which perform constant folding and drop neutral elements.
struct Node {
    NodeKind kind = NodeKind::constant;
    std::vector<NodePtr> children;
    double value = 0.0;  // constant value; scaled_kernel center
    int axis = 0;        // coordinate / scaled_kernel axis
    int order = 0;       // power exponent; derivative order of test_function / scaled_kernel
    std::shared_ptr<const BumpPolynomial> profile;
    std::shared_ptr<const DistributionSpec> distribution;
    std::shared_ptr<const SmoothingKernelNet> kernel;
    std::vector<int> derivative;  // embedded: β per distribution axis
    std::vector<int> axes;        // embedded: distribution axis -> coordinate axis
    std::size_t hash = 0;
    int dimension = 0;  // 1 + largest coordinate axis referenced
};

struct Interval {
    double lo;
    double hi;
};

/// A smooth net (ε, x) ↦ u_ε(x), held as an immutable expression graph with
/// exact coordinate derivatives. The optional domain is an open box; an empty
/// domain means all of ℝⁿ.
class NetExpr {
public:
    NetExpr();
    explicit NetExpr(NodePtr root, std::vector<Interval> domain = {});

    static NetExpr constant(double c);
    static NetExpr coordinate(int axis);
    static NetExpr epsilon();

    const Node& node() const noexcept { return *root_; }
    const NodePtr& root() const noexcept { return root_; }
    int dimension() const noexcept;
    const std::vector<Interval>& domain() const noexcept { return domain_; }
    NetExpr with_domain(std::vector<Interval> domain) const;
    std::size_t hash() const noexcept { return root_->hash; }
    bool is_constant() const noexcept { return root_->kind == NodeKind::constant; }
    bool is_zero() const noexcept { return is_constant() && root_->value == 0.0; }

private:
    NodePtr root_;
    std::vector<Interval> domain_;
};

NetExpr operator+(const NetExpr& a, const NetExpr& b);
NetExpr operator-(const NetExpr& a, const NetExpr& b);
NetExpr operator-(const NetExpr& a);
NetExpr operator*(const NetExpr& a, const NetExpr& b);
NetExpr operator/(const NetExpr& a, const NetExpr& b);
NetExpr operator*(double c, const NetExpr& a);
NetExpr operator+(double c, const NetExpr& a);
NetExpr sum(std::span<const NetExpr> terms);
NetExpr pow(const NetExpr& a, int n);
NetExpr exp(const NetExpr& a);
NetExpr sin(const NetExpr& a);
NetExpr cos(const NetExpr& a);
NetExpr log(const NetExpr& a);
NetExpr abs(const NetExpr& a);
NetExpr sign(const NetExpr& a);
NetExpr compose_test_function(const BumpPolynomial& profile, const NetExpr& arg, int order = 0);
NetExpr scaled_kernel(const BumpPolynomial& profile, int axis, double center = 0.0, int order = 0);

/// Builds an embedded-distribution node (use embed_distribution() for the
/// checked public entry point).
NetExpr make_embedded(std::shared_ptr<const DistributionSpec> u, std::shared_ptr<const SmoothingKernelNet> kernel,
                      std::vector<int> derivative, std::vector<int> axes);

/// u_ε(x). Throws DomainError outside the declared domain and EvaluationError
/// (with the node path) on a non-finite intermediate.
double eval(const NetExpr& e, double eps, std::span<const double> x);

/// Exact partial derivative along `axis`.
NetExpr derive(const NetExpr& e, int axis);
/// ∂^α e.
NetExpr derive(const NetExpr& e, std::span<const int> alpha);

struct Jet {
    double value = 0.0;
    std::map<std::vector<int>, double> partials;
    double at(const std::vector<int>& alpha) const { return partials.at(alpha); }
};

/// All partials with |α| ≤ order at (ε, x). order ≤ cap (default 6).
Jet jet_eval(const NetExpr& e, double eps, std::span<const double> x, int order);

/// Every multiindex of dimension `dim` with |α| ≤ order, by increasing |α|.
std::vector<std::vector<int>> multiindices(int dim, int order);

/// Localized structure of a net at a given ε: kernel centres and the
/// half-width of the region where they act. Sampling and quadrature refine
/// around these.
struct Feature {
    int axis;
    double center;
    double half_width;
};
std::vector<Feature> features(const NetExpr& e, double eps);

bool contains_embedded(const NetExpr& e);
bool depends_on_epsilon(const NetExpr& e);
/// True when the net varies along coordinate `axis`.
bool depends_on_axis(const NetExpr& e, int axis);
bool structurally_equal(const NetExpr& a, const NetExpr& b);

/// The one-dimensional net t ↦ e(ε, x with x_free = t), other coordinates held
/// at `point`.
NetExpr restrict_to_axis(const NetExpr& e, int free_axis, std::span<const double> point);

/// e with coordinate `axis` replaced by another net (composition).
NetExpr substitute(const NetExpr& e, int axis, const NetExpr& replacement);

nlohmann::json to_json(const NetExpr& e);
NetExpr net_from_json(const nlohmann::json& j);

namespace detail {
// Implemented by the embedding layer.
double embedded_value(const Node& n, double eps, std::span<const double> x);
void embedded_features(const Node& n, double eps, std::vector<Feature>& out);
nlohmann::json embedded_to_json(const Node& n);
NetExpr embedded_from_json(const nlohmann::json& j, const std::string& path);
std::size_t distribution_hash(const DistributionSpec& u);
std::size_t kernel_hash(const SmoothingKernelNet& k);
bool same_distribution(const DistributionSpec& a, const DistributionSpec& b);
}  // namespace detail

}  // namespace gencalc
