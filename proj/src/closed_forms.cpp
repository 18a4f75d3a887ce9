#include "switchheat/closed_forms.hpp"

#include <cmath>
#include <numbers>

namespace switchheat::closedform {

namespace {

constexpr double kPi = std::numbers::pi;

double mixing_gamma(const Params& p) { return p.L * std::sqrt((p.r0 + p.r1) / p.D); }

double dd_rate(const Params& p, int k) {
    const double w = double(k) * kPi / p.L;
    return p.D * w * w;
}

double dn_rate(const Params& p, int k) {
    const double w = double(2 * k - 1) * kPi / (2.0 * p.L);
    return p.D * w * w;
}

double ramp_coeff(const Params& p, int k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    return sign * p.b * std::sqrt(2.0 * p.L) / (double(k) * kPi);
}

} // namespace

double tanhc(double g) {
    const double a = std::abs(g);
    if (a < 1e-4) {
        const double g2 = g * g;
        return 1.0 - g2 / 3.0 + 2.0 * g2 * g2 / 15.0;
    }
    return std::tanh(g) / g;
}

double gamma_coth_gamma_minus_1(double g) {
    const double a = std::abs(g);
    if (a < 1e-4) {
        const double g2 = g * g;
        return g2 / 3.0 - g2 * g2 / 45.0;
    }
    // g coth g - 1 = g - 1 + 2g / (e^{2g} - 1); the last term underflows to 0
    // for large g instead of overflowing.
    return a - 1.0 + 2.0 * a / std::expm1(2.0 * a);
}

double dn_slope(const Params& params) {
    params.validate();
    const double rho = params.r0 / params.r1;
    return (params.b / params.L) / (1.0 + rho * tanhc(mixing_gamma(params)));
}

double dn_slope_series(const Params& params, int k_terms) {
    params.validate();
    if (k_terms < 1) throw config_error("dn_slope_series: k_terms must be at least 1");
    const double p = params.occupancy();
    double sum = 0.0;
    for (int k = 1; k <= k_terms; ++k) {
        const double ek = params.r1 / (params.r1 + dn_rate(params, k));
        const double q = double(2 * k - 1);
        const double gk = 8.0 * params.L / (kPi * kPi * q * q);
        sum += ek * gk / (p * ek + (1.0 - p));
    }
    return (1.0 - p) * params.b / (params.L - p * sum);
}

double dn_slope_series_tail(const Params& params, int k_terms) {
    params.validate();
    if (k_terms < 1) throw config_error("dn_slope_series_tail: k_terms must be at least 1");
    const double p = params.occupancy();
    double head = 0.0;
    for (int k = 1; k <= k_terms; ++k) {
        const double q = double(2 * k - 1);
        head += 8.0 / (kPi * kPi * q * q);
    }
    const double tail_sum = std::max(0.0, 1.0 - head); // sum over all k is exactly 1
    return p / (1.0 - p) * tail_sum * dn_slope(params);
}

double dd_mean(const Params& params, double x) {
    params.validate();
    if (!(x >= 0.0 && x <= params.L))
        throw std::invalid_argument("dd_mean: x outside [0, L]");
    const double p = params.occupancy();
    return (1.0 - p) * (params.b / params.L) * x;
}

BetaMarginal beta_marginal(const Params& params, int k, Family which) {
    params.validate();
    if (k < 1) throw std::invalid_argument("beta_marginal: k must be at least 1");
    const double beta_k = dd_rate(params, k);
    BetaMarginal m;
    m.scale = ramp_coeff(params, k);
    if (which == Family::Y0) {
        m.alpha = params.r1 / beta_k + 1.0;
        m.beta = params.r0 / beta_k;
    } else {
        m.alpha = params.r1 / beta_k;
        m.beta = params.r0 / beta_k + 1.0;
    }
    return m;
}

double dd_l2_variance(const Params& params) {
    params.validate();
    const double r = params.r0 + params.r1;
    return params.b * params.b * params.D * params.r1 * params.r0 *
           gamma_coth_gamma_minus_1(mixing_gamma(params)) / (params.L * r * r * r);
}

double dd_l2_variance_series(const Params& params, int k_terms) {
    params.validate();
    if (k_terms < 1)
        throw config_error("dd_l2_variance_series: k_terms must be at least 1");
    const double r = params.r0 + params.r1;
    double second = 0.0;
    for (int k = 1; k <= k_terms; ++k) {
        const double beta_k = dd_rate(params, k);
        const double ck = ramp_coeff(params, k);
        second += params.r1 * (params.r1 + beta_k) / (r * (r + beta_k)) * ck * ck;
    }
    const double one_minus_p = 1.0 - params.occupancy();
    return second - (params.L / 3.0) * params.b * params.b * one_minus_p * one_minus_p;
}

double dd_joint_second_moment(const Params& params, int n, int m) {
    params.validate();
    if (n < 1 || m < 1)
        throw std::invalid_argument("dd_joint_second_moment: modes must be at least 1");
    if (n > m) std::swap(n, m); // symmetric; canonical order keeps it bit-symmetric
    const double bn = dd_rate(params, n);
    const double bm = dd_rate(params, m);
    const double r0 = params.r0;
    const double r1 = params.r1;
    const double num = (bm + bn + r1) * ((bm + bn) * (bm + r1) * (bn + r1) +
                                         (2.0 * bm * bn + (bm + bn) * r1) * r0);
    const double den = (bm + bn) * (bm + r1 + r0) * (bn + r1 + r0) * (bm + bn + r1 + r0);
    return num / den * ramp_coeff(params, m) * ramp_coeff(params, n);
}

Interval sandwich_bounds(int k, int n, double xk) {
    if (k < 1 || n <= k)
        throw std::invalid_argument("sandwich_bounds: requires 1 <= k < n");
    if (!(xk >= 0.0 && xk <= 1.0))
        throw std::invalid_argument("sandwich_bounds: xk outside [0, 1]");
    const double e = (double(n) / double(k)) * (double(n) / double(k));
    return {std::pow(xk, e), 1.0 - std::pow(1.0 - xk, e)};
}

Interval regularity_envelope(const Params& params, int k, double r, double M,
                             Family which) {
    params.validate();
    if (k < 1) throw std::invalid_argument("regularity_envelope: k must be at least 1");
    if (!(r > 0.0 && r < 0.5))
        throw std::invalid_argument("regularity_envelope: requires 0 < r < 1/2");
    if (!(M >= 0.0)) throw std::invalid_argument("regularity_envelope: M must be >= 0");
    const double half = M / std::pow(double(k), r);
    const double center = (which == Family::Y0) ? 1.0 : 0.0;
    return {center - half, center + half};
}

double insect_flux(const Params& params) { return params.D * dn_slope(params); }

} // namespace switchheat::closedform
