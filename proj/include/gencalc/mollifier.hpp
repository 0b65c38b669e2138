#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gencalc {

/// Reference bump b(t) = exp(−1/(1−t²)) on |t| < 1, zero elsewhere.
double reference_bump(double t);

/// k-th derivative of the reference bump.
double reference_bump_derivative(int k, double t);

/// One-dimensional polynomial × bump profile
///
///     φ(x) = P(t)·b(t),   t = (x − center)/radius,
///
/// with P given by its power-basis coefficients in t. Every derivative is exact:
/// b^(k)(t) = Q_k(t)·(1−t²)^(−2k)·b(t) with Q_k from a polynomial recurrence.
class BumpPolynomial {
public:
    BumpPolynomial(double center, double radius, std::vector<double> coefficients);

    double value(double x) const { return derivative(0, x); }
    double derivative(int k, double x) const;

    /// ∫ φ over (−∞, x].
    double cdf(double x) const;
    double mass() const noexcept { return mass_; }

    double center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    double lower() const noexcept { return center_ - radius_; }
    double upper() const noexcept { return center_ + radius_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

    /// amplitude·φ((y − shift)/scale), again a BumpPolynomial.
    BumpPolynomial rescaled(double scale, double shift, double amplitude) const;

    /// Odd polynomial coefficients all zero and center 0.
    bool is_even() const noexcept;

private:
    BumpPolynomial(double center, double radius, std::vector<double> coefficients, double known_mass);
    void init_derivatives();
    double poly_derivative(int m, double t) const;

    double center_;
    double radius_;
    std::vector<double> coefficients_;
    std::vector<std::vector<double>> poly_derivatives_;
    double mass_ = 0.0;
};

struct MomentCertificate {
    /// |∫ x^k φ − δ_{k0}| for k = 0..q (max over axes for tensor products).
    std::vector<double> moment_residuals;
    /// Condition number of the moment system (0 when nothing was solved).
    double condition = 0.0;
};

enum class MollifierConstruction {
    /// Even polynomial; all odd moments vanish by symmetry.
    even,
    /// In A_q with a nonzero (q+1)-th moment, so that the Taylor remainder of a
    /// convolution is exactly of order q+1. Equals `even` for odd q.
    exact_order,
};

std::string to_string(MollifierConstruction c);
MollifierConstruction construction_from_string(const std::string& s);

/// Compactly supported smooth function on ℝⁿ, stored as a tensor product of
/// one-dimensional BumpPolynomial factors.
class TestFunction {
public:
    explicit TestFunction(BumpPolynomial factor, int moment_order = -1, MomentCertificate certificate = {});
    explicit TestFunction(std::vector<BumpPolynomial> factors, int moment_order = -1,
                          MomentCertificate certificate = {});

    int dimension() const noexcept { return static_cast<int>(factors_.size()); }
    /// Largest factor radius; the function vanishes outside the box of this
    /// half-width around center().
    double support_radius() const noexcept;
    std::vector<double> center() const;
    /// -1 when no moment condition is certified.
    int moment_order() const noexcept { return moment_order_; }
    MollifierConstruction construction() const noexcept { return construction_; }
    const MomentCertificate& certificate() const noexcept { return certificate_; }
    const BumpPolynomial& factor(int axis) const { return factors_.at(static_cast<std::size_t>(axis)); }
    const std::vector<BumpPolynomial>& factors() const noexcept { return factors_; }

    double value(std::span<const double> x) const;
    double derivative(std::span<const int> alpha, std::span<const double> x) const;
    double mass() const;
    bool is_even() const;

    TestFunction with_construction(MollifierConstruction c) const;

private:
    std::vector<BumpPolynomial> factors_;
    int moment_order_;
    MomentCertificate certificate_;
    MollifierConstruction construction_ = MollifierConstruction::even;
};

/// Unnormalized reference profile exp(−1/(1−(x/radius)²)).
TestFunction build_bump(double radius);

/// φ ∈ A_q: unit mass and ∫ x^α φ = 0 for 1 ≤ |α| ≤ q. The polynomial
/// coefficients come from a full-pivoting solve of the moment system; the
/// result carries re-verified moment residuals. Dimension n > 1 is the tensor
/// product of n identical one-dimensional factors.
TestFunction build_vanishing_moment_mollifier(int q, double radius, int dimension = 1,
                                              MollifierConstruction construction = MollifierConstruction::even);

/// ∫ x^α φ(x) dx by adaptive quadrature (factorized across axes).
double moment(const TestFunction& phi, std::span<const int> alpha);

/// φ_{ε,x}(y) = ε^{-n} φ((y − x)/ε).
TestFunction scale_translate(const TestFunction& phi, double eps, std::span<const double> x);

/// Tensor product of one-dimensional test functions.
TestFunction tensor_product(std::span<const TestFunction> factors);

/// ρ_ε(y) = ε^{-n} φ(y/ε). Requires unit mass.
class StrictDeltaNet {
public:
    explicit StrictDeltaNet(TestFunction base);
    const TestFunction& base() const noexcept { return base_; }
    TestFunction at(double eps) const;

private:
    TestFunction base_;
};

StrictDeltaNet strict_delta_net(const TestFunction& phi);

/// Smoothing kernel ψ⃗_ε(x) = amplitude·ε^{eps_power}·φ_{ε,x}. The canonical
/// translation kernel has amplitude 1 and eps_power 0; the other values exist
/// to build deliberately defective kernels for test-object checks.
class SmoothingKernelNet {
public:
    explicit SmoothingKernelNet(TestFunction base, double amplitude = 1.0, double eps_power = 0.0);

    const TestFunction& base() const noexcept { return base_; }
    double amplitude() const noexcept { return amplitude_; }
    double eps_power() const noexcept { return eps_power_; }
    int dimension() const noexcept { return base_.dimension(); }
    /// Metadata warnings (e.g. non-even base: delta embeds reflected).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    /// Overall factor amplitude·ε^{eps_power}.
    double weight(double eps) const;
    /// ψ⃗_ε(x) as a concrete test function.
    TestFunction at(double eps, std::span<const double> x) const;

private:
    TestFunction base_;
    double amplitude_;
    double eps_power_;
    std::vector<std::string> warnings_;
};

SmoothingKernelNet translation_kernel_net(const TestFunction& phi);

nlohmann::json to_json(const TestFunction& phi);
TestFunction test_function_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SmoothingKernelNet& k);
SmoothingKernelNet kernel_from_json(const nlohmann::json& j);

}  // namespace gencalc
