"""Heat equation with randomly switching boundary conditions.

Closed-form stationary statistics, switching-environment sampling, and
stationary field draws backed by the C++ core.
"""

from ._core import (
    Params,
    beta_marginal,
    dd_joint_second_moment,
    dd_l2_variance,
    dd_l2_variance_series,
    dd_mean,
    dn_slope,
    dn_slope_series,
    evaluate_fields,
    insect_flux,
    interior_grid,
    occupancy_p,
    sample_holding_pairs,
    sandwich_bounds,
    stationary_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "Params",
    "beta_marginal",
    "dd_joint_second_moment",
    "dd_l2_variance",
    "dd_l2_variance_series",
    "dd_mean",
    "dn_slope",
    "dn_slope_series",
    "evaluate_fields",
    "insect_flux",
    "interior_grid",
    "occupancy_p",
    "sample_holding_pairs",
    "sandwich_bounds",
    "stationary_coefficients",
]
