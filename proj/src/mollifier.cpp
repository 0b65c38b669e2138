#include "gencalc/mollifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gencalc/defaults.hpp"
#include "gencalc/error.hpp"
#include "gencalc/quadrature.hpp"

namespace gencalc {
namespace {

constexpr int kBumpTableSize = 24;

using Poly = std::vector<double>;

Poly poly_derivative(const Poly& p) {
    if (p.size() <= 1) return {0.0};
    Poly d(p.size() - 1);
    for (std::size_t j = 1; j < p.size(); ++j) d[j - 1] = static_cast<double>(j) * p[j];
    return d;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly poly_add(Poly a, const Poly& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t j = 0; j < b.size(); ++j) a[j] += b[j];
    return a;
}

double horner(const Poly& p, double t) {
    double r = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * t + *it;
    return r;
}

// Q_k with b^(k)(t) = Q_k(t) (1−t²)^(−2k) b(t).
const std::vector<Poly>& bump_table() {
    static const std::vector<Poly> table = [] {
        std::vector<Poly> q{{1.0}};
        const Poly s{1.0, 0.0, -1.0};
        const Poly s2 = poly_mul(s, s);
        for (int k = 0; k + 1 < kBumpTableSize; ++k) {
            const Poly& qk = q.back();
            Poly next = poly_mul(poly_derivative(qk), s2);
            next = poly_add(next, poly_mul(Poly{0.0, 4.0 * k}, poly_mul(s, qk)));
            next = poly_add(next, poly_mul(Poly{0.0, -2.0}, qk));
            q.push_back(std::move(next));
        }
        return q;
    }();
    return table;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

QuadratureOptions tight() {
    QuadratureOptions o;
    o.abs_tol = 1e-15;
    o.rel_tol = 1e-14;
    return o;
}

}  // namespace

double reference_bump(double t) { return reference_bump_derivative(0, t); }

double reference_bump_derivative(int k, double t) {
    if (k < 0 || k >= kBumpTableSize) throw ArgumentError("bump derivative order out of range");
    if (!(std::abs(t) < 1.0)) return 0.0;
    const double s = (1.0 - t) * (1.0 + t);
    const double log_factor = -1.0 / s - 2.0 * k * std::log(s);
    if (log_factor < -745.0) return 0.0;
    return horner(bump_table()[static_cast<std::size_t>(k)], t) * std::exp(log_factor);
}

BumpPolynomial::BumpPolynomial(double center, double radius, std::vector<double> coefficients)
    : center_(center), radius_(radius), coefficients_(std::move(coefficients)) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("support radius must be positive");
    init_derivatives();
    auto r = integrate([this](double x) { return value(x); }, lower(), upper(), tight(),
                       std::array<double, 1>{center_});
    mass_ = require_converged(r, "mass of bump polynomial");
}

BumpPolynomial::BumpPolynomial(double center, double radius, std::vector<double> coefficients, double known_mass)
    : center_(center), radius_(radius), coefficients_(std::move(coefficients)), mass_(known_mass) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("support radius must be positive");
    init_derivatives();
}

void BumpPolynomial::init_derivatives() {
    if (coefficients_.empty()) coefficients_.push_back(0.0);
    poly_derivatives_.push_back(coefficients_);
    while (poly_derivatives_.back().size() > 1)
        poly_derivatives_.push_back(gencalc::poly_derivative(poly_derivatives_.back()));
}

double BumpPolynomial::poly_derivative(int m, double t) const {
    if (static_cast<std::size_t>(m) >= poly_derivatives_.size()) return 0.0;
    return horner(poly_derivatives_[static_cast<std::size_t>(m)], t);
}

double BumpPolynomial::derivative(int k, double x) const {
    const double t = (x - center_) / radius_;
    if (!(std::abs(t) < 1.0)) return 0.0;
    double sum = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double p = poly_derivative(k - i, t);
        if (p == 0.0) continue;
        sum += binomial(k, i) * p * reference_bump_derivative(i, t);
    }
    return k == 0 ? sum : sum / std::pow(radius_, k);
}

double BumpPolynomial::cdf(double x) const {
    if (x <= lower()) return 0.0;
    if (x >= upper()) return mass_;
    auto f = [this](double y) { return value(y); };
    if (x <= center_) return require_converged(integrate(f, lower(), x), "bump cdf");
    return mass_ - require_converged(integrate(f, x, upper()), "bump cdf");
}

BumpPolynomial BumpPolynomial::rescaled(double scale, double shift, double amplitude) const {
    std::vector<double> c = coefficients_;
    for (double& v : c) v *= amplitude;
    if (!(scale > 0.0)) throw ArgumentError("rescaling factor must be positive");
    return BumpPolynomial(shift + scale * center_, scale * radius_, std::move(c), amplitude * scale * mass_);
}

bool BumpPolynomial::is_even() const noexcept {
    if (center_ != 0.0) return false;
    for (std::size_t j = 1; j < coefficients_.size(); j += 2)
        if (coefficients_[j] != 0.0) return false;
    return true;
}

std::string to_string(MollifierConstruction c) {
    return c == MollifierConstruction::even ? "even" : "exact_order";
}

MollifierConstruction construction_from_string(const std::string& s) {
    if (s == "even") return MollifierConstruction::even;
    if (s == "exact_order" || s == "exact") return MollifierConstruction::exact_order;
    throw ArgumentError("unknown mollifier construction '" + s + "'");
}

TestFunction::TestFunction(BumpPolynomial factor, int moment_order, MomentCertificate certificate)
    : TestFunction(std::vector<BumpPolynomial>{std::move(factor)}, moment_order, std::move(certificate)) {}

TestFunction::TestFunction(std::vector<BumpPolynomial> factors, int moment_order, MomentCertificate certificate)
    : factors_(std::move(factors)), moment_order_(moment_order), certificate_(std::move(certificate)) {
    if (factors_.empty() || dimension() > defaults::max_dimension)
        throw ArgumentError("test function dimension must be in 1.." + std::to_string(defaults::max_dimension));
}

double TestFunction::support_radius() const noexcept {
    double r = 0.0;
    for (const auto& f : factors_) r = std::max(r, f.radius());
    return r;
}

std::vector<double> TestFunction::center() const {
    std::vector<double> c;
    for (const auto& f : factors_) c.push_back(f.center());
    return c;
}

double TestFunction::value(std::span<const double> x) const {
    if (x.size() != factors_.size()) throw ArgumentError("point dimension does not match test function");
    double v = 1.0;
    for (std::size_t a = 0; a < factors_.size() && v != 0.0; ++a) v *= factors_[a].value(x[a]);
    return v;
}

double TestFunction::derivative(std::span<const int> alpha, std::span<const double> x) const {
    if (x.size() != factors_.size() || alpha.size() != factors_.size())
        throw ArgumentError("multiindex/point dimension does not match test function");
    double v = 1.0;
    for (std::size_t a = 0; a < factors_.size() && v != 0.0; ++a) v *= factors_[a].derivative(alpha[a], x[a]);
    return v;
}

double TestFunction::mass() const {
    double m = 1.0;
    for (const auto& f : factors_) m *= f.mass();
    return m;
}

bool TestFunction::is_even() const {
    return std::all_of(factors_.begin(), factors_.end(), [](const BumpPolynomial& f) { return f.is_even(); });
}

TestFunction TestFunction::with_construction(MollifierConstruction c) const {
    TestFunction t = *this;
    t.construction_ = c;
    return t;
}

TestFunction build_bump(double radius) {
    if (!(radius > 0.0)) throw ArgumentError("bump radius must be positive");
    return TestFunction(BumpPolynomial(0.0, radius, {1.0}));
}

namespace {

// Normalized moments ν_k = ∫ t^k b(t) dt of the reference bump; odd ones vanish.
std::vector<double> bump_moments(int count) {
    std::vector<double> m(static_cast<std::size_t>(count), 0.0);
    for (int k = 0; k < count; k += 2) {
        auto r = integrate([k](double t) { return std::pow(t, k) * reference_bump(t); }, -1.0, 1.0, tight(),
                           std::array<double, 1>{0.0});
        m[static_cast<std::size_t>(k)] = require_converged(r, "reference bump moment");
    }
    return m;
}

// Solves Σ_j a_{p_j} ν_{e_i + p_j} = rhs_i with full pivoting; returns the
// solution and the 2-norm condition number.
std::pair<Eigen::VectorXd, double> solve_moment_system(const std::vector<double>& nu, const std::vector<int>& powers,
                                                       const std::vector<int>& equations,
                                                       const Eigen::VectorXd& rhs) {
    const auto n = static_cast<Eigen::Index>(powers.size());
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            h(i, j) = nu[static_cast<std::size_t>(equations[static_cast<std::size_t>(i)] +
                                                  powers[static_cast<std::size_t>(j)])];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (!lu.isInvertible() || !(cond < defaults::max_moment_condition)) {
        std::ostringstream os;
        os << "moment system is singular (condition number " << cond << ")";
        throw ConstructionError(os.str(), cond);
    }
    return {lu.solve(rhs), cond};
}

double raw_moment(const BumpPolynomial& f, int k) {
    auto r = integrate([&](double x) { return std::pow(x, k) * f.value(x); }, f.lower(), f.upper(), {},
                       std::array<double, 1>{f.center()});
    return require_converged(r, "moment quadrature");
}

}  // namespace

TestFunction build_vanishing_moment_mollifier(int q, double radius, int dimension,
                                              MollifierConstruction construction) {
    if (q < 0) throw ArgumentError("moment order q must be non-negative");
    if (!(radius > 0.0)) throw ArgumentError("mollifier radius must be positive");
    if (dimension < 1 || dimension > defaults::max_dimension) throw ArgumentError("unsupported dimension");

    const int half = q / 2;
    const auto nu = bump_moments(2 * q + 4);
    std::vector<int> even_powers;
    for (int j = 0; j <= half; ++j) even_powers.push_back(2 * j);

    // In t = x/R the unit-mass condition reads R·∫ P b dt = 1.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(even_powers.size()));
    rhs(0) = 1.0 / radius;
    auto [even_coeffs, cond] = solve_moment_system(nu, even_powers, even_powers, rhs);

    std::vector<double> coeffs(static_cast<std::size_t>(q + 2), 0.0);
    for (std::size_t j = 0; j < even_powers.size(); ++j)
        coeffs[static_cast<std::size_t>(even_powers[j])] = even_coeffs(static_cast<Eigen::Index>(j));

    if (construction == MollifierConstruction::exact_order && q % 2 == 0) {
        // Prescribe ν_{q+1} = |ν_{q+2}|^{(q+1)/(q+2)}, using the first surviving
        // moment of the even solution as the length scale.
        double nu_next = 0.0;
        for (std::size_t j = 0; j < even_powers.size(); ++j)
            nu_next += even_coeffs(static_cast<Eigen::Index>(j)) *
                       nu[static_cast<std::size_t>(q + 2 + even_powers[j])];
        nu_next *= radius;
        const double target = std::pow(std::abs(nu_next), double(q + 1) / double(q + 2));
        std::vector<int> odd_powers;
        for (int j = 0; j <= half; ++j) odd_powers.push_back(2 * j + 1);
        Eigen::VectorXd odd_rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(odd_powers.size()));
        odd_rhs(static_cast<Eigen::Index>(half)) = target / radius;
        auto [odd_coeffs, odd_cond] = solve_moment_system(nu, odd_powers, odd_powers, odd_rhs);
        for (std::size_t j = 0; j < odd_powers.size(); ++j)
            coeffs[static_cast<std::size_t>(odd_powers[j])] = odd_coeffs(static_cast<Eigen::Index>(j));
        cond = std::max(cond, odd_cond);
    }
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();

    BumpPolynomial factor(0.0, radius, coeffs);
    MomentCertificate cert;
    cert.condition = cond;
    for (int k = 0; k <= q; ++k) {
        const double target = k == 0 ? 1.0 : 0.0;
        const double residual = std::abs(raw_moment(factor, k) - target);
        const double tol = k == 0 ? defaults::unit_mass_tol : defaults::moment_tol;
        if (!(residual <= tol)) {
            std::ostringstream os;
            os << "moment " << k << " residual " << residual << " exceeds " << tol << " (condition number "
               << cond << ")";
            throw ConstructionError(os.str(), cond);
        }
        cert.moment_residuals.push_back(residual);
    }
    std::vector<BumpPolynomial> factors(static_cast<std::size_t>(dimension), factor);
    return TestFunction(std::move(factors), q, std::move(cert)).with_construction(construction);
}

double moment(const TestFunction& phi, std::span<const int> alpha) {
    if (alpha.size() != static_cast<std::size_t>(phi.dimension()))
        throw ArgumentError("multiindex dimension does not match test function");
    double m = 1.0;
    for (std::size_t a = 0; a < alpha.size(); ++a) {
        if (alpha[a] < 0) throw ArgumentError("multiindex entries must be non-negative");
        m *= raw_moment(phi.factor(static_cast<int>(a)), alpha[a]);
    }
    return m;
}

TestFunction scale_translate(const TestFunction& phi, double eps, std::span<const double> x) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("epsilon must lie in (0, 1]");
    if (x.size() != static_cast<std::size_t>(phi.dimension()))
        throw ArgumentError("translation point dimension does not match test function");
    std::vector<BumpPolynomial> factors;
    for (int a = 0; a < phi.dimension(); ++a)
        factors.push_back(phi.factor(a).rescaled(eps, x[static_cast<std::size_t>(a)], 1.0 / eps));
    return TestFunction(std::move(factors), phi.moment_order(), phi.certificate())
        .with_construction(phi.construction());
}

TestFunction tensor_product(std::span<const TestFunction> factors) {
    if (factors.empty()) throw ArgumentError("tensor product needs at least one factor");
    std::vector<BumpPolynomial> out;
    int order = -1;
    bool first = true;
    MomentCertificate cert;
    for (const auto& f : factors) {
        if (f.dimension() != 1) throw ArgumentError("tensor product factors must be one-dimensional");
        out.push_back(f.factor(0));
        order = first ? f.moment_order() : std::min(order, f.moment_order());
        cert.condition = std::max(cert.condition, f.certificate().condition);
        const auto& r = f.certificate().moment_residuals;
        if (first) {
            cert.moment_residuals = r;
        } else {
            cert.moment_residuals.resize(std::min(cert.moment_residuals.size(), r.size()));
            for (std::size_t k = 0; k < cert.moment_residuals.size(); ++k)
                cert.moment_residuals[k] = std::max(cert.moment_residuals[k], r[k]);
        }
        first = false;
    }
    return TestFunction(std::move(out), order, std::move(cert));
}

StrictDeltaNet::StrictDeltaNet(TestFunction base) : base_(std::move(base)) {
    if (std::abs(base_.mass() - 1.0) > defaults::unit_mass_tol)
        throw ArgumentError("strict delta net requires a unit-mass test function");
}

TestFunction StrictDeltaNet::at(double eps) const {
    std::vector<double> origin(static_cast<std::size_t>(base_.dimension()), 0.0);
    return scale_translate(base_, eps, origin);
}

StrictDeltaNet strict_delta_net(const TestFunction& phi) { return StrictDeltaNet(phi); }

SmoothingKernelNet::SmoothingKernelNet(TestFunction base, double amplitude, double eps_power)
    : base_(std::move(base)), amplitude_(amplitude), eps_power_(eps_power) {
    if (!base_.is_even()) warnings_.push_back("non-even kernel: the embedded delta is reflected");
}

double SmoothingKernelNet::weight(double eps) const {
    return eps_power_ == 0.0 ? amplitude_ : amplitude_ * std::pow(eps, eps_power_);
}

TestFunction SmoothingKernelNet::at(double eps, std::span<const double> x) const {
    TestFunction t = scale_translate(base_, eps, x);
    const double w = weight(eps);
    if (w == 1.0) return t;
    std::vector<BumpPolynomial> f = t.factors();
    f[0] = f[0].rescaled(1.0, 0.0, w);
    return TestFunction(std::move(f), t.moment_order(), t.certificate());
}

SmoothingKernelNet translation_kernel_net(const TestFunction& phi) {
    if (std::abs(phi.mass() - 1.0) > defaults::unit_mass_tol)
        throw ArgumentError("translation kernel requires a unit-mass test function");
    return SmoothingKernelNet(phi);
}

namespace {

nlohmann::json factor_json(const BumpPolynomial& f) {
    return {{"dimension", 1},
            {"support_radius", f.radius()},
            {"center", f.center()},
            {"coefficient_basis", "t=(x-center)/support_radius"},
            {"polynomial_coefficients", f.coefficients()}};
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + "." + key + ": " + e.what());
    }
}

BumpPolynomial factor_from_json(const nlohmann::json& j, const std::string& path) {
    const double center = j.is_object() && j.contains("center") ? field<double>(j, "center", path) : 0.0;
    return BumpPolynomial(center, field<double>(j, "support_radius", path),
                          field<std::vector<double>>(j, "polynomial_coefficients", path));
}

}  // namespace

nlohmann::json to_json(const TestFunction& phi) {
    nlohmann::json j = factor_json(phi.factor(0));
    j["schema"] = "gencalc.mollifier/1";
    j["dimension"] = phi.dimension();
    j["support_radius"] = phi.support_radius();
    j["moment_order"] = phi.moment_order();
    j["construction"] = to_string(phi.construction());
    j["certificate"] = {{"moment_residuals", phi.certificate().moment_residuals},
                        {"condition", phi.certificate().condition}};
    if (phi.dimension() > 1) {
        j["factors"] = nlohmann::json::array();
        for (const auto& f : phi.factors()) j["factors"].push_back(factor_json(f));
    }
    return j;
}

TestFunction test_function_from_json(const nlohmann::json& j) {
    const std::string path = "$";
    const int dim = field<int>(j, "dimension", path);
    const int order = j.contains("moment_order") ? field<int>(j, "moment_order", path) : -1;
    MomentCertificate cert;
    if (j.contains("certificate")) {
        const auto& c = j.at("certificate");
        if (c.contains("moment_residuals"))
            cert.moment_residuals = field<std::vector<double>>(c, "moment_residuals", path + ".certificate");
        if (c.contains("condition")) cert.condition = field<double>(c, "condition", path + ".certificate");
    }
    std::vector<BumpPolynomial> factors;
    if (dim > 1) {
        if (!j.contains("factors") || !j.at("factors").is_array() || j.at("factors").size() != std::size_t(dim))
            throw SchemaError(path + ".factors: expected " + std::to_string(dim) + " entries");
        for (std::size_t a = 0; a < j.at("factors").size(); ++a)
            factors.push_back(factor_from_json(j.at("factors")[a], path + ".factors[" + std::to_string(a) + "]"));
    } else if (dim == 1) {
        factors.push_back(factor_from_json(j, path));
    } else {
        throw SchemaError(path + ".dimension: must be positive");
    }
    auto construction = MollifierConstruction::even;
    if (j.contains("construction")) construction = construction_from_string(field<std::string>(j, "construction", path));
    return TestFunction(std::move(factors), order, std::move(cert)).with_construction(construction);
}

nlohmann::json to_json(const SmoothingKernelNet& k) {
    return {{"mollifier", to_json(k.base())},
            {"amplitude", k.amplitude()},
            {"eps_power", k.eps_power()},
            {"warnings", k.warnings()}};
}

SmoothingKernelNet kernel_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mollifier")) throw SchemaError("$.mollifier: missing");
    const double amp = j.contains("amplitude") ? field<double>(j, "amplitude", "$") : 1.0;
    const double pow = j.contains("eps_power") ? field<double>(j, "eps_power", "$") : 0.0;
    return SmoothingKernelNet(test_function_from_json(j.at("mollifier")), amp, pow);
}

}  // namespace gencalc
