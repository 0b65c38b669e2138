#pragma once

#include <string>
#include <vector>

#include "gencalc/defaults.hpp"
#include "gencalc/netexpr.hpp"
#include "json.hpp"

namespace gencalc {

/// Closed box K with a sampling resolution (points per axis, endpoints
/// included).
struct CompactBox {
    std::vector<Interval> axes;
    int resolution = defaults::box_resolution;

    CompactBox() = default;
    CompactBox(std::vector<Interval> a, int res = defaults::box_resolution);
    /// [lo, hi]^dim.
    static CompactBox cube(int dim, double lo, double hi, int res = defaults::box_resolution);
    /// "[-1,1]" or "[-1,1]x[0,2]".
    static CompactBox parse(const std::string& text, int res = defaults::box_resolution);

    int dimension() const noexcept { return static_cast<int>(axes.size()); }
    std::vector<double> axis_points(int axis) const;
    std::string to_string() const;
};

/// ε_k = start·ratio^k, k = 0..count−1.
struct EpsGrid {
    double start = defaults::eps_start;
    double ratio = defaults::eps_ratio;
    int count = defaults::eps_count;

    EpsGrid() = default;
    EpsGrid(double s, double r, int c);
    /// Finer, slower grid for measuring decay orders of smooth differences.
    static EpsGrid order_grid();
    std::vector<double> values() const;
};

struct SweepSample {
    double eps;
    double sup;  // +inf when evaluation overflowed
    std::vector<double> argmax;
};

/// sup_{x∈K} |∂^α u_ε(x)| for each ε of the grid: tensor-grid maximum (with
/// extra stencils over the net's kernel features), then one coordinate-wise
/// refinement pass around the maximiser.
std::vector<SweepSample> sup_sweep(const NetExpr& e, const CompactBox& K, const std::vector<int>& alpha,
                                   const EpsGrid& grid);

struct FitOptions {
    int window = defaults::fit_window;
    int min_samples = defaults::fit_min_samples;
    /// Samples at or below this are dropped; all dropped yields the +inf sentinel.
    double floor = 0.0;
};

struct OrderFit {
    double exponent = 0.0;  // +inf sentinel when every sample is at or below the floor
    double intercept = 0.0;
    double r2 = 1.0;
    int used = 0;
};

/// Least-squares slope of log(sup) against log(ε) over the last `window`
/// usable samples.
OrderFit fit_order(const std::vector<double>& eps, const std::vector<double>& values, const FitOptions& opts = {});
OrderFit fit_order(const std::vector<SweepSample>& samples, const FitOptions& opts = {});

enum class Verdict { moderate, negligible, not_moderate, not_negligible, indeterminate };
const char* to_string(Verdict v);

struct AlphaReport {
    std::vector<int> alpha;
    std::vector<SweepSample> samples;
    OrderFit fit;
    bool overflow = false;
    std::string status;
};

struct AsymptoticReport {
    std::string test;  // "moderate" or "negligible"
    Verdict verdict = Verdict::indeterminate;
    int N = -1;      // for Moderate(N)
    int m_max = -1;  // for negligibility tests
    int alpha_max = 0;
    CompactBox box;
    EpsGrid grid;
    std::vector<AlphaReport> per_alpha;
    std::vector<std::string> warnings;

    /// Worst (smallest) fitted exponent across α.
    double min_exponent() const;
    std::string verdict_label() const;
};

AsymptoticReport classify_moderate(const NetExpr& e, const CompactBox& K, int alpha_max, const EpsGrid& grid = {});
AsymptoticReport classify_negligible(const NetExpr& e, const CompactBox& K, int alpha_max, int m_max,
                                     const EpsGrid& grid = {});
/// classify_negligible(u − v).
AsymptoticReport equal_in_algebra(const NetExpr& u, const NetExpr& v, const CompactBox& K, int alpha_max, int m_max,
                                  const EpsGrid& grid = {});

nlohmann::json to_json(const AsymptoticReport& r);

}  // namespace gencalc
