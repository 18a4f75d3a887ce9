#pragma once

#include <functional>

#include <Eigen/Dense>

#include "switchheat/spectral.hpp"
#include "switchheat/switching.hpp"

namespace switchheat::oracle {

/// Independent re-computations of the engine's flows: a classical
/// Runge-Kutta integrator for the mode ODEs and a Crank-Nicolson finite
/// difference stepper for the full PDE. Deliberately share no code with the
/// spectral module so agreement is evidence, not tautology.

/// Composite Simpson rule; panels must be even.
[[nodiscard]] double simpson(const std::function<double(double)>& f, double a,
                             double b, int panels);

/// One classical 4th-order step of the switching mode ODE
/// du/dt = -beta_k (u - target), target = 0 in the relaxing phase (j = 1)
/// and the ramp coefficient c_k in the forcing phase (j = 0).
[[nodiscard]] double ode_oracle_step(const spectral::Params& params, int k,
                                     int j_state, double u_k, double dt);

/// Integrate mode k from u0 at time 0 to t_end against an environment,
/// with steps of at most dt, aligned so no step crosses a switching epoch.
[[nodiscard]] double ode_oracle_path(const spectral::Params& params, int k,
                                     Environment& env, double u0, double t_end,
                                     double dt);

/// All modes 1..u0.size() advanced on one environment.
[[nodiscard]] Eigen::VectorXd ode_oracle_field(const spectral::Params& params,
                                               Environment& env,
                                               const Eigen::VectorXd& u0,
                                               double t_end, double dt);

/// Finite difference solution on the closed node grid x_i = i L / cells.
struct FdResult {
    Eigen::VectorXd x;
    Eigen::VectorXd u;
};

/// Crank-Nicolson stepper for the boundary-switching heat equation. The left
/// end is pinned at 0 throughout; the right end follows the environment:
/// Dirichlet b while forcing, and while relaxing either Dirichlet 0 (dd) or
/// a second-order one-sided Neumann stencil (dn). Steps are clipped at the
/// switching epochs so the boundary row never changes mid-step.
[[nodiscard]] FdResult fd_oracle(spectral::Example example,
                                 const spectral::Params& params,
                                 const std::function<double(double)>& u0,
                                 double t_end, int cells, double dt,
                                 Environment& env);

} // namespace switchheat::oracle
