#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gencalc/association.hpp"
#include "gencalc/asymptotics.hpp"
#include "gencalc/mollifier.hpp"
#include "gencalc/netexpr.hpp"
#include "gencalc/ode.hpp"
#include "json.hpp"

namespace gencalc {

/// Chart axes of the Brinkmann chart (u, v, x, y).
namespace chart {
inline constexpr int u = 0, v = 1, x = 2, y = 3;
}

/// Profile grammar over the Brinkmann chart: x and y (also u, v) map to their
/// chart axes.
NetExpr parse_profile(const std::string& text);

enum class MetricKind {
    /// g_uu arbitrary, g_uv = −1/2, g_xx = g_yy = 1, rest 0. Has a closed-form inverse.
    brinkmann,
    general,
};

struct RegularizedMetric {
    std::string name;
    MetricKind kind = MetricKind::general;
    std::vector<std::string> labels;
    /// Row-major dim×dim; g[i][j] and g[j][i] hold the same expression.
    std::vector<NetExpr> g;
    /// Brinkmann profile f(x, y); zero for other metrics.
    NetExpr profile;
    std::optional<StrictDeltaNet> pulse;
    /// The metric is flat Brinkmann outside |u| ≤ ε·pulse_radius (0: no pulse window).
    double pulse_radius = 0.0;
    std::string signature = "(-,+,+,+); g_uv = -1/2 encodes -du dv";

    int dimension() const noexcept { return static_cast<int>(labels.size()); }
    const NetExpr& component(int i, int j) const { return g.at(static_cast<std::size_t>(i * dimension() + j)); }
};

/// g_uu = f(x,y)·ρ_ε(u).
RegularizedMetric build_brinkmann(const NetExpr& f, const StrictDeltaNet& rho);
/// g_uu = 1 + ι(|u|), the regularized kink, with translation kernel from φ.
RegularizedMetric kink_metric(const TestFunction& phi);
/// Minkowski space in Brinkmann coordinates (g_uu = 0).
RegularizedMetric flat_metric();
/// Arbitrary symmetric metric. Throws ArgumentError if components are not
/// symmetric at the expression level.
RegularizedMetric general_metric(std::vector<std::string> labels, std::vector<NetExpr> components,
                                 std::string name = "general");

/// Symbolic determinant.
NetExpr determinant(const RegularizedMetric& m);

/// Exact inverse components (row-major). Brinkmann metrics use the closed
/// form g^{uv} = −2, g^{vv} = −4·g_uu, g^{xx} = g^{yy} = 1; other metrics the
/// symbolic adjugate. Throws DegeneracyError when the determinant is
/// identically zero.
std::vector<NetExpr> metric_inverse(const RegularizedMetric& m);

struct NondegeneracyReport {
    double min_abs_det = 0.0;
    double eps_at_min = 0.0;
    std::vector<double> point_at_min;
};

/// Samples |det g_ε| over K for every grid ε. Throws DegeneracyError naming
/// (ε, point) when it drops below the threshold.
NondegeneracyReport check_nondegenerate(const RegularizedMetric& m, const CompactBox& K, const EpsGrid& grid,
                                        double threshold = defaults::det_threshold);

struct ChristoffelField {
    int dim = 0;
    std::vector<NetExpr> gamma;  // index (k·dim + i)·dim + j
    const NetExpr& operator()(int k, int i, int j) const {
        return gamma.at(static_cast<std::size_t>((k * dim + i) * dim + j));
    }
};

/// Γ^k_ij = ½ g^{km}(∂_i g_jm + ∂_j g_im − ∂_m g_ij); lower indices share one
/// expression.
ChristoffelField christoffel(const RegularizedMetric& m);

struct CurvatureField {
    int dim = 0;
    std::vector<NetExpr> riemann;  // R^i_{jkl}
    std::vector<NetExpr> ricci;    // R_{jk} = R^i_{jki}
    const NetExpr& R(int i, int j, int k, int l) const {
        return riemann.at(static_cast<std::size_t>(((i * dim + j) * dim + k) * dim + l));
    }
    const NetExpr& Ric(int j, int k) const { return ricci.at(static_cast<std::size_t>(j * dim + k)); }
};

/// R^i_{jkl} = ∂_l Γ^i_{kj} − ∂_k Γ^i_{lj} + Γ^i_{lm}Γ^m_{kj} − Γ^i_{km}Γ^m_{lj},
/// stored so that R^i_{jlk} is the exact negation of R^i_{jkl}.
CurvatureField curvature(const RegularizedMetric& m, const ChristoffelField& gamma);

/// With the contraction above, Brinkmann metrics have
/// Ric_uu = brinkmann_ricci_constant · Δf · ρ_ε(u).
inline constexpr double brinkmann_ricci_constant = -0.5;

// ---------------------------------------------------------------------------
// Geroch–Traschen regularity

struct ComponentSweep {
    std::string name;
    bool constant = false;
    std::vector<SweepSample> samples;
    OrderFit fit;
    bool fit_ok = true;
    bool bounded = true;
};

struct SquareIntegralRecord {
    std::string name;  // e.g. "d_u g_uu"
    std::vector<double> eps;
    std::vector<double> values;  // ∫_K (∂_a g_ij)²
    OrderFit fit;
    bool fit_ok = true;
    bool square_integrable = true;
};

enum class GtVerdict { consistent, fails_boundedness, fails_l2, indeterminate };
const char* to_string(GtVerdict v);

struct GtRegularityReport {
    std::string metric;
    CompactBox box;
    EpsGrid grid;
    std::vector<ComponentSweep> metric_sweeps;
    std::vector<ComponentSweep> inverse_sweeps;
    std::vector<SquareIntegralRecord> square_integrals;
    NondegeneracyReport nondegeneracy;
    GtVerdict verdict = GtVerdict::indeterminate;

    const ComponentSweep* metric_sweep(const std::string& name) const;
    const SquareIntegralRecord* square_integral(const std::string& name) const;
};

GtRegularityReport gt_check(const RegularizedMetric& m, const CompactBox& K, const EpsGrid& grid = {});

// ---------------------------------------------------------------------------
// Geodesics

/// Initial data at u = u0: positions (v, x, y) and their u-derivatives.
struct GeodesicInit {
    double u0 = defaults::geodesic_u0;
    double v0 = 0.0, x0 = 0.0, y0 = 0.0;
    double dv0 = 0.0, dx0 = 0.0, dy0 = 0.0;
    bool operator==(const GeodesicInit&) const = default;
};

struct GeodesicOptions {
    double u_end = 3.0;
    double rel_tol = defaults::ode_rel_tol;
    double abs_tol = defaults::ode_abs_tol;
    /// Max step inside the pulse window, as a fraction of ε.
    double window_step_fraction = defaults::pulse_step_fraction;
};

struct GeodesicSolution {
    double eps = 0.0;
    GeodesicInit init;
    /// (u, v, x, y, dv/du, dx/du, dy/du) per accepted step.
    std::vector<std::array<double, 7>> samples;
    long steps = 0;
    long rejected = 0;
    double max_step = 0.0;
    bool complete = false;
    std::string status;
    double window = 0.0;  // ε·pulse_radius
    /// Max deviation of g(ċ, ∂_v) and g(ċ, ċ) from their initial values,
    /// relative to max(1, |initial value|).
    double killing_drift = 0.0;
    double norm_drift = 0.0;

    std::string csv(bool header = true) const;
};

/// Integrates the geodesic equations of g_ε with u as parameter. For the other
/// coordinates X^k: d²X^k/du² = −Γ^k_ij Ẋ^iẊ^j + Γ^u_ij Ẋ^iẊ^j Ẋ^k, Ẋ^u = 1.
/// Requires a 4-dimensional metric.
GeodesicSolution geodesic_solve(const RegularizedMetric& m, const ChristoffelField& gamma, double eps,
                                const GeodesicInit& init, const GeodesicOptions& opts = {});

struct JumpSample {
    double eps;
    double velocity_jump;
    double position_jump;
    double line_residual;  // max distance of post-pulse samples from the fitted line
};

struct CoordinateLimit {
    std::string label;
    std::vector<JumpSample> table;
    double velocity_jump = 0.0, velocity_error = 0.0;
    double position_jump = 0.0, position_error = 0.0;
    double pre_slope = 0.0, pre_intercept = 0.0;  // line through the initial data
};

struct BrokenGeodesicFit {
    GeodesicInit init;
    std::vector<CoordinateLimit> coordinates;  // v, x, y
    const CoordinateLimit& coordinate(const std::string& label) const;
};

/// Piecewise-linear limit of a family of solutions (any order in ε) with a
/// kink at u = 0. Needs ≥ 4 complete solutions sharing one init at u = −1 with
/// zero transverse velocity; PreconditionError otherwise.
BrokenGeodesicFit limit_profile(const std::vector<GeodesicSolution>& solutions);

struct CompletenessRow {
    GeodesicInit init;
    std::vector<double> eps;
    std::vector<bool> complete;
    std::vector<std::string> status;
    /// Largest grid ε with every grid ε at or below it complete.
    std::optional<double> eps0;
};

struct CompletenessTable {
    double u_max = defaults::completeness_u_max;
    std::vector<CompletenessRow> rows;
};

/// Initial data at u = −1 used when no battery is given.
std::vector<GeodesicInit> default_init_battery();

CompletenessTable completeness_scan(const RegularizedMetric& m, const ChristoffelField& gamma,
                                    const std::vector<GeodesicInit>& inits, const EpsGrid& grid = {},
                                    double u_max = defaults::completeness_u_max);

// ---------------------------------------------------------------------------
// Distributional Ricci

struct RicciPointResult {
    double x = 0.0, y = 0.0;
    double laplacian = 0.0;  // Δf(x, y)
    double coefficient = 0.0;  // brinkmann_ricci_constant · Δf
    AssociationResult association;
    std::optional<MatchReport> match;
    bool matched = false;
};

/// Associates u ↦ Ric_uu(u, 0, x, y) at each point and matches it against
/// brinkmann_ricci_constant·Δf(x, y)·δ(u).
std::vector<RicciPointResult> ricci_associate(const RegularizedMetric& m, const CurvatureField& R,
                                              const std::vector<TestFunction>& battery,
                                              const std::vector<std::array<double, 2>>& points,
                                              const EpsGrid& grid = {});

nlohmann::json to_json(const GtRegularityReport& r);
nlohmann::json to_json(const GeodesicInit& i);
GeodesicInit geodesic_init_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeodesicSolution& s);
nlohmann::json to_json(const BrokenGeodesicFit& f);
nlohmann::json to_json(const CompletenessTable& t);
nlohmann::json to_json(const std::vector<RicciPointResult>& r);

}  // namespace gencalc
