#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "gencalc/mollifier.hpp"
#include "gencalc/netexpr.hpp"
#include "json.hpp"

namespace gencalc {

enum class DistributionKind { delta, heaviside, vp, regular, derivative, combination };

const char* to_string(DistributionKind k);

/// One factor of a tensor-product probe: profile^(order), times the probe's
/// overall amplitude.
struct ProbeFactor {
    const BumpPolynomial* profile;
    int order;
};

/// g(y) = amplitude · Π_a profile_a^(order_a)(y_a). Probes are what a
/// distribution is paired against; derivative specs raise the orders.
struct Probe {
    std::vector<ProbeFactor> factors;
    double amplitude = 1.0;

    int dimension() const noexcept { return static_cast<int>(factors.size()); }
    double value(std::span<const double> y) const;
    /// Smallest box containing the support.
    double lower(int axis) const;
    double upper(int axis) const;
};

/// A distribution from the supported catalog. Immutable; share through
/// DistributionPtr.
class DistributionSpec;
using DistributionPtr = std::shared_ptr<const DistributionSpec>;

class DistributionSpec {
public:
    static DistributionPtr delta(std::vector<double> point);
    static DistributionPtr heaviside(int dimension, int axis, double threshold = 0.0);
    /// Principal value of 1/x (one-dimensional).
    static DistributionPtr vp();
    /// Locally integrable ε-independent function. `breakpoints[a]` lists the
    /// coordinates along axis a where the integrand is not smooth; kinks of
    /// |x − c| and sign(x − c) are detected automatically.
    static DistributionPtr regular(NetExpr f, int dimension, std::vector<std::vector<double>> breakpoints = {});
    /// ∂_axis of another spec. Nesting depth is capped (default 6).
    static DistributionPtr derivative(DistributionPtr of, int axis);
    static DistributionPtr combination(std::vector<std::pair<double, DistributionPtr>> terms);

    DistributionKind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return dimension_; }
    const std::vector<double>& point() const noexcept { return point_; }
    int axis() const noexcept { return axis_; }
    double threshold() const noexcept { return threshold_; }
    const NetExpr& expression() const noexcept { return expression_; }
    const std::vector<std::vector<double>>& breakpoints() const noexcept { return breakpoints_; }
    const DistributionPtr& operand() const noexcept { return operand_; }
    const std::vector<std::pair<double, DistributionPtr>>& terms() const noexcept { return terms_; }
    int derivative_depth() const noexcept { return depth_; }
    std::size_t hash() const noexcept { return hash_; }

    /// ⟨u, g⟩.
    double pair(const Probe& g) const;

    /// Coordinates along `axis` where the distribution is singular or not smooth.
    void singular_points(int axis, std::vector<double>& out) const;

    /// ∂_axis^j of a regular spec's expression for j < count (cached).
    std::vector<NetExpr> axis_derivatives(int axis, int count) const;

private:
    DistributionSpec() = default;
    void finalize();

    DistributionKind kind_ = DistributionKind::delta;
    int dimension_ = 1;
    std::vector<double> point_;
    int axis_ = 0;
    double threshold_ = 0.0;
    NetExpr expression_;
    std::vector<std::vector<double>> breakpoints_;
    DistributionPtr operand_;
    std::vector<std::pair<double, DistributionPtr>> terms_;
    int depth_ = 0;
    std::size_t hash_ = 0;
    mutable std::mutex cache_mutex_;
    mutable std::vector<std::vector<NetExpr>> derivative_cache_;
};

/// ⟨u, ψ⟩ for a test function.
double pairing(const DistributionSpec& u, const TestFunction& psi);

/// ⟨vp(1/x), ψ⟩ = ∫₀^∞ (ψ(y) − ψ(−y))/y dy.
double vp_pairing(const TestFunction& psi);

nlohmann::json to_json(const DistributionSpec& u);
/// Accepts `expression` for regular specs either as a string in the profile
/// grammar or as a net JSON tree.
DistributionPtr distribution_from_json(const nlohmann::json& j);

}  // namespace gencalc
