#pragma once

#include "switchheat/spectral.hpp"

namespace switchheat::closedform {

using spectral::Params;

/// Stationary-law statistics of the switching heat examples in closed form,
/// together with the series they were derived from so either representation
/// can serve as an oracle for the other.

/// tanh(g)/g, stable at g = 0.
[[nodiscard]] double tanhc(double g);

/// g coth g - 1, stable at g = 0 and free of overflow for large g.
[[nodiscard]] double gamma_coth_gamma_minus_1(double g);

/// Slope of the mean stationary profile in the Dirichlet/Neumann example:
/// (1 + (rho/gamma) tanh gamma)^{-1} b/L with gamma = L sqrt((r0+r1)/D),
/// rho = r0/r1. The intercept is zero.
[[nodiscard]] double dn_slope(const Params& params);

/// Partial sum of the series the slope was solved from; converges to
/// dn_slope from below as k_terms grows.
[[nodiscard]] double dn_slope_series(const Params& params, int k_terms);

/// Rigorous bound on |dn_slope_series(k_terms) - dn_slope|.
[[nodiscard]] double dn_slope_series_tail(const Params& params, int k_terms);

/// Mean stationary profile of the Dirichlet/Dirichlet example at x:
/// (1-p)(b/L)x where p is the relaxing-phase occupancy.
[[nodiscard]] double dd_mean(const Params& params, double x);

/// Which side of the switching cycle a pullback attractor closes:
/// Y0 ends the forcing phase (profile near the ramp), Y1 ends the
/// relaxation phase (profile near zero).
enum class Family { Y0, Y1 };

/// Scaled Beta law of one stationary mode in the Dirichlet/Dirichlet
/// example: coefficient k of the named attractor is scale * Beta(alpha, beta).
struct BetaMarginal {
    double alpha = 0.0;
    double beta = 0.0;
    double scale = 0.0; ///< ramp coefficient c_k, sign included

    [[nodiscard]] double mean() const { return alpha / (alpha + beta); }
    [[nodiscard]] double second_moment() const {
        return alpha * (alpha + 1.0) / ((alpha + beta) * (alpha + beta + 1.0));
    }
};

[[nodiscard]] BetaMarginal beta_marginal(const Params& params, int k, Family which);

/// L2 variance of the stationary profile in the Dirichlet/Dirichlet example:
/// b^2 D r1 r0 (gamma coth gamma - 1) / (L (r0+r1)^3).
[[nodiscard]] double dd_l2_variance(const Params& params);

/// Pre-simplification form: sum of stationary second moments per mode minus
/// the squared-mean constant (L/3) b^2 (1-p)^2.
[[nodiscard]] double dd_l2_variance_series(const Params& params, int k_terms);

/// Cross-moment E<Y0, b_n><Y0, b_m> of the end-of-forcing attractor.
[[nodiscard]] double dd_joint_second_moment(const Params& params, int n, int m);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Pathwise envelope for mode n of the normalized stationary profile given
/// mode k: xk^{(n/k)^2} <= x_n <= 1 - (1-xk)^{(n/k)^2}, valid for k < n.
[[nodiscard]] Interval sandwich_bounds(int k, int n, double xk);

/// Almost-sure regularity envelope with constant M and exponent r < 1/2:
/// Y0 modes lie in 1 -+ M/k^r, Y1 modes in -+ M/k^r (all normalized by c_k).
[[nodiscard]] Interval regularity_envelope(const Params& params, int k, double r,
                                           double M, Family which);

/// Mean oxygen flux through the switching boundary: D * dn_slope.
[[nodiscard]] double insect_flux(const Params& params);

} // namespace switchheat::closedform
