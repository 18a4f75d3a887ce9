#include "switchheat/oracles.hpp"

#include <cmath>
#include <numbers>

namespace switchheat::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

double dd_rate(const spectral::Params& p, int k) {
    const double w = double(k) * kPi / p.L;
    return p.D * w * w;
}

double ramp_coeff(const spectral::Params& p, int k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    return sign * p.b * std::sqrt(2.0 * p.L) / (double(k) * kPi);
}

double rk4_step(double beta, double target, double u, double h) {
    auto f = [&](double v) { return -beta * (v - target); };
    const double k1 = f(u);
    const double k2 = f(u + 0.5 * h * k1);
    const double k3 = f(u + 0.5 * h * k2);
    const double k4 = f(u + h * k3);
    return u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Visit the environment's phases in order up to t_end:
/// fn(j_state, phase_start, phase_stop) with the last phase clipped.
template <class Fn>
void for_each_phase(Environment& env, double t_end, Fn&& fn) {
    double cursor = 0.0;
    std::size_t n = 0;
    while (cursor < t_end) {
        const double mid = env.mid_switch(n);
        if (cursor < mid) {
            const double stop = std::min(mid, t_end);
            fn(0, cursor, stop);
            cursor = stop;
            if (cursor >= t_end) break;
        }
        const double end = env.cycle_end(n + 1);
        const double stop = std::min(end, t_end);
        fn(1, cursor, stop);
        cursor = stop;
        ++n;
    }
}

int substeps(double span, double dt) {
    return std::max(1, int(std::ceil(span / dt - 1e-12)));
}

/// Thomas solve of a tridiagonal system; diag and rhs are clobbered.
void solve_tridiagonal(Eigen::VectorXd& lower, Eigen::VectorXd& diag,
                       Eigen::VectorXd& upper, Eigen::VectorXd& rhs,
                       Eigen::VectorXd& out) {
    const Eigen::Index n = diag.size();
    for (Eigen::Index i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i)
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
}

enum class RightEnd { dirichlet, neumann };

/// One Crank-Nicolson step of length h on the interior vector w
/// (w[i] = u at node i+1). The right boundary is either u_M = value
/// (Dirichlet) or the one-sided stencil u_M = (4u_{M-1} - u_{M-2})/3.
void cn_step(Eigen::VectorXd& w, double h, double a, RightEnd kind, double value) {
    const Eigen::Index n = w.size();
    const double half = 0.5 * h;

    // Row coefficients of A (the discrete Laplacian times D/dx^2 = a).
    Eigen::VectorXd a_lower = Eigen::VectorXd::Constant(n, a);
    Eigen::VectorXd a_diag = Eigen::VectorXd::Constant(n, -2.0 * a);
    Eigen::VectorXd a_upper = Eigen::VectorXd::Constant(n, a);
    a_lower[0] = 0.0;
    a_upper[n - 1] = 0.0;
    double forcing = 0.0;
    if (kind == RightEnd::dirichlet) {
        forcing = a * value;
    } else {
        a_diag[n - 1] = -2.0 / 3.0 * a;
        a_lower[n - 1] = 2.0 / 3.0 * a;
    }

    // rhs = (I + (h/2) A) w + h * forcing_vector
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = w[i] + half * a_diag[i] * w[i];
        if (i > 0) acc += half * a_lower[i] * w[i - 1];
        if (i + 1 < n) acc += half * a_upper[i] * w[i + 1];
        rhs[i] = acc;
    }
    rhs[n - 1] += h * forcing;

    Eigen::VectorXd m_lower = -half * a_lower;
    Eigen::VectorXd m_diag = Eigen::VectorXd::Ones(n) - half * a_diag;
    Eigen::VectorXd m_upper = -half * a_upper;
    solve_tridiagonal(m_lower, m_diag, m_upper, rhs, w);
}

} // namespace

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels) {
    if (panels < 2 || panels % 2 != 0)
        throw std::invalid_argument("simpson: panels must be even and >= 2");
    const double h = (b - a) / double(panels);
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i)
        acc += f(a + double(i) * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double ode_oracle_step(const spectral::Params& params, int k, int j_state,
                       double u_k, double dt) {
    params.validate();
    if (k < 1) throw std::invalid_argument("ode_oracle_step: k must be >= 1");
    if (j_state != 0 && j_state != 1)
        throw std::invalid_argument("ode_oracle_step: j_state must be 0 or 1");
    if (!(dt > 0.0)) throw std::invalid_argument("ode_oracle_step: dt must be > 0");
    const double target = (j_state == 1) ? 0.0 : ramp_coeff(params, k);
    return rk4_step(dd_rate(params, k), target, u_k, dt);
}

double ode_oracle_path(const spectral::Params& params, int k, Environment& env,
                       double u0, double t_end, double dt) {
    params.validate();
    if (!(t_end >= 0.0)) throw std::invalid_argument("ode_oracle_path: t_end < 0");
    if (!(dt > 0.0)) throw std::invalid_argument("ode_oracle_path: dt must be > 0");
    const double beta = dd_rate(params, k);
    const double ck = ramp_coeff(params, k);
    double u = u0;
    for_each_phase(env, t_end, [&](int j, double start, double stop) {
        const double target = (j == 1) ? 0.0 : ck;
        const int m = substeps(stop - start, dt);
        const double h = (stop - start) / double(m);
        for (int i = 0; i < m; ++i) u = rk4_step(beta, target, u, h);
    });
    return u;
}

Eigen::VectorXd ode_oracle_field(const spectral::Params& params, Environment& env,
                                 const Eigen::VectorXd& u0, double t_end,
                                 double dt) {
    Eigen::VectorXd u(u0.size());
    for (Eigen::Index k = 0; k < u0.size(); ++k)
        u[k] = ode_oracle_path(params, int(k) + 1, env, u0[k], t_end, dt);
    return u;
}

FdResult fd_oracle(spectral::Example example, const spectral::Params& params,
                   const std::function<double(double)>& u0, double t_end,
                   int cells, double dt, Environment& env) {
    params.validate();
    if (cells < 4) throw config_error("fd_oracle: needs at least 4 cells");
    if (!(dt > 0.0)) throw std::invalid_argument("fd_oracle: dt must be > 0");
    if (!(t_end >= 0.0)) throw std::invalid_argument("fd_oracle: t_end < 0");

    const int M = cells;
    const double dx = params.L / double(M);
    const double a = params.D / (dx * dx);

    Eigen::VectorXd w(M - 1);
    for (int i = 1; i < M; ++i) w[i - 1] = u0(double(i) * dx);

    for_each_phase(env, t_end, [&](int j, double start, double stop) {
        RightEnd kind = RightEnd::dirichlet;
        double value = params.b;
        if (j == 1) {
            if (example == spectral::Example::dd) {
                value = 0.0;
            } else {
                kind = RightEnd::neumann;
            }
        }
        const int m = substeps(stop - start, dt);
        const double h = (stop - start) / double(m);
        for (int i = 0; i < m; ++i) cn_step(w, h, a, kind, value);
    });

    FdResult result;
    result.x.resize(M + 1);
    result.u.resize(M + 1);
    for (int i = 0; i <= M; ++i) result.x[i] = double(i) * dx;
    result.u[0] = 0.0;
    result.u.segment(1, M - 1) = w;

    const int j_end = locate(env, t_end).state;
    if (j_end == 0) {
        result.u[M] = params.b;
    } else if (example == spectral::Example::dd) {
        result.u[M] = 0.0;
    } else {
        result.u[M] = (4.0 * w[M - 2] - w[M - 3]) / 3.0;
    }
    return result;
}

} // namespace switchheat::oracle
