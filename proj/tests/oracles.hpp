#pragma once

// Reference computations that share no code with the library: plain-number
// metrics differentiated by finite differences, and tanh-sinh moments.

#include <Eigen/Dense>
#include <array>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>

#include "gencalc/mollifier.hpp"

namespace oracle {

using P4 = std::array<double, 4>;
using MetricFn = std::function<Eigen::Matrix4d(const P4&)>;

// g_uu = f(x, y)·ρ(u), g_uv = −1/2, g_xx = g_yy = 1.
inline MetricFn brinkmann_numeric(std::function<double(double, double)> f, std::function<double(double)> rho) {
    return [f, rho](const P4& x) {
        Eigen::Matrix4d g = Eigen::Matrix4d::Zero();
        g(0, 0) = f(x[2], x[3]) * rho(x[0]);
        g(0, 1) = g(1, 0) = -0.5;
        g(2, 2) = g(3, 3) = 1.0;
        return g;
    };
}

// Γ^k_ij by fourth-order central differences of g.
inline std::array<double, 64> fd_christoffel(const MetricFn& g, const P4& x, double h) {
    std::array<Eigen::Matrix4d, 4> dg;
    for (int a = 0; a < 4; ++a) {
        auto at = [&](double s) {
            P4 y = x;
            y[a] += s;
            return g(y);
        };
        dg[a] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    }
    const Eigen::Matrix4d gi = g(x).inverse();
    std::array<double, 64> G{};
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0;
                for (int m = 0; m < 4; ++m) s += gi(k, m) * (dg[i](j, m) + dg[j](i, m) - dg[m](i, j));
                G[(k * 4 + i) * 4 + j] = 0.5 * s;
            }
    return G;
}

// R_jk = ∂_i Γ^i_kj − ∂_k Γ^i_ij + Γ^i_im Γ^m_kj − Γ^i_km Γ^m_ij, all by differences.
inline double fd_ricci(const MetricFn& g, const P4& x, int j, int k) {
    const double h = 1e-3;
    auto G = [&](const P4& y) { return fd_christoffel(g, y, h); };
    auto at = [](const std::array<double, 64>& c, int a, int b, int d) { return c[(a * 4 + b) * 4 + d]; };
    std::array<std::array<double, 64>, 4> dG;
    for (int a = 0; a < 4; ++a) {
        auto shift = [&](double s) {
            P4 y = x;
            y[a] += s;
            return G(y);
        };
        const auto p2 = shift(2 * h), p1 = shift(h), m1 = shift(-h), m2 = shift(-2 * h);
        for (int t = 0; t < 64; ++t) dG[a][t] = (-p2[t] + 8 * p1[t] - 8 * m1[t] + m2[t]) / (12 * h);
    }
    const auto c = G(x);
    double r = 0;
    for (int i = 0; i < 4; ++i) {
        r += at(dG[i], i, k, j) - at(dG[k], i, i, j);
        for (int m = 0; m < 4; ++m) r += at(c, i, i, m) * at(c, m, k, j) - at(c, i, k, m) * at(c, m, i, j);
    }
    return r;
}

// ∫ x^k φ over the support of a one-dimensional test function.
inline double moment(const gencalc::TestFunction& phi, int k) {
    boost::math::quadrature::tanh_sinh<double> ts;
    const gencalc::BumpPolynomial& f = phi.factor(0);
    return ts.integrate([&](double x) { return std::pow(x, k) * f.value(x); }, f.lower(), f.upper());
}

}  // namespace oracle
