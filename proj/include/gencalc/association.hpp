#pragma once

#include <string>
#include <vector>

#include "gencalc/asymptotics.hpp"
#include "gencalc/distribution.hpp"
#include "gencalc/mollifier.hpp"
#include "gencalc/netexpr.hpp"
#include "json.hpp"

namespace gencalc {

/// ∫ u_ε(x) ψ(x) dx. Quadrature is split at ψ's centre and forced to
/// subdivide across every kernel feature of the net.
double pair(const NetExpr& e, const TestFunction& psi, double eps);

struct Extrapolation {
    double limit = 0.0;
    double error = 0.0;
    /// Two-level extrapolant at each grid index (NaN where undefined).
    std::vector<double> extrapolants;
};

/// Two-level Richardson extrapolation of a sequence sampled on a geometric
/// ε-grid with the given ratio; assumes P(ε) = L + aε + bε² + ...
Extrapolation richardson(const std::vector<double>& values, double ratio);

struct PairingRecord {
    int index = 0;
    std::vector<double> eps;
    std::vector<double> pairings;
    Extrapolation extrapolation;
    bool converged = false;
    bool divergent = false;
    OrderFit growth;  // fit of |pairing| against ε
};

enum class AssociationVerdict { associated, divergent, indeterminate };
const char* to_string(AssociationVerdict v);

struct AssociationResult {
    AssociationVerdict verdict = AssociationVerdict::indeterminate;
    /// Most negative growth exponent among divergent battery elements.
    double growth_exponent = 0.0;
    std::vector<PairingRecord> records;
    std::vector<TestFunction> battery;
    EpsGrid grid;

    std::string verdict_label() const;
};

AssociationResult associate(const NetExpr& e, const std::vector<TestFunction>& battery, const EpsGrid& grid = {});

/// Five translated/rescaled A_2 mollifiers followed by two polynomial × bump
/// functions.
std::vector<TestFunction> default_battery();

struct MatchRecord {
    int index;
    double limit;
    double expected;
    double tolerance;
    bool match;
};

struct MatchReport {
    std::vector<MatchRecord> records;
    bool match = false;
};

/// Compares each extrapolated limit with ⟨candidate, ψ⟩; a match needs every
/// difference within max(1e-3, 3 × error estimate). Requires an Associated
/// result (PreconditionError otherwise).
MatchReport match_candidate(const AssociationResult& r, const DistributionSpec& candidate);

/// Rows "index,eps,pairing,extrapolant".
std::string pairing_table_csv(const AssociationResult& r);

nlohmann::json to_json(const AssociationResult& r);
nlohmann::json to_json(const MatchReport& m);

/// Battery file: an array of test-function documents, or {"battery": [...]},
/// or {"default": true}.
std::vector<TestFunction> battery_from_json(const nlohmann::json& j);
nlohmann::json battery_to_json(const std::vector<TestFunction>& battery);

}  // namespace gencalc
