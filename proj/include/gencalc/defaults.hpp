#pragma once

// Every tunable default used by the library and the CLI lives here.

namespace gencalc::defaults {

// Quadrature
inline constexpr double quad_abs_tol = 1e-12;
inline constexpr double quad_rel_tol = 1e-12;
inline constexpr int quad_max_depth = 60;
inline constexpr int quad_max_intervals = 4000;
/// Outer tolerance of ⟨u_ε, ψ⟩; inner embedded values carry roundoff noise well above 1e-12.
inline constexpr double pair_abs_tol = 1e-10;
inline constexpr double pair_rel_tol = 1e-8;

// Mollifiers
inline constexpr double unit_mass_tol = 1e-12;
inline constexpr double moment_tol = 1e-10;
inline constexpr double max_moment_condition = 1e14;
inline constexpr int max_kernel_derivative = 14;
inline constexpr int max_dimension = 4;

// Nets
inline constexpr int jet_order_cap = 6;
inline constexpr int distribution_derivative_depth = 6;

// Asymptotics
inline constexpr double eps_start = 0.5;
inline constexpr double eps_ratio = 0.5;
inline constexpr int eps_count = 14;
/// Grid used when measuring decay orders of smooth differences (ι(f) − σ(f),
/// test-object condition (ii)); the default grid's tail sits below the
/// double-precision noise floor for orders above ~4.
inline constexpr double order_eps_start = 1.0;
inline constexpr double order_eps_ratio = 0.8;
inline constexpr int order_eps_count = 16;
inline constexpr int box_resolution = 64;
inline constexpr int fit_window = 8;
inline constexpr int fit_min_samples = 6;
inline constexpr double noise_floor = 1e-13;
inline constexpr double r2_threshold = 0.98;
inline constexpr double exponent_slack = 0.25;
inline constexpr double not_moderate_exponent = -40.0;
inline constexpr int alpha_max = 3;
inline constexpr int m_max = 8;
inline constexpr int feature_stencil = 33;
inline constexpr int refine_points = 17;

// Association
inline constexpr double match_tol = 1e-3;
inline constexpr double divergence_exponent = -0.1;

// Spacetime
inline constexpr double det_threshold = 1e-8;
inline constexpr double gt_bounded_exponent = -0.1;
inline constexpr double ode_rel_tol = 1e-10;
inline constexpr double ode_abs_tol = 1e-12;
inline constexpr double pulse_step_fraction = 1.0 / 20.0;
inline constexpr double blowup_norm = 1e12;
inline constexpr double min_step = 1e-14;
inline constexpr double geodesic_u0 = -1.0;
inline constexpr double completeness_u_max = 10.0;
inline constexpr double conservation_tol = 1e-6;

}  // namespace gencalc::defaults
