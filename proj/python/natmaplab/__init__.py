"""Boundary kernel maps on the hyperbolic ball.

Thin wrapper over the compiled core: quadrature grids on the ideal
boundary, the visual embedding and its barycenter inverse, natural maps
on the symmetric backend, entropy and comass estimates, and the
experiment driver (configs and results travel as JSON strings).
"""

from ._natmaplab import (
    Grid,
    busemann,
    comass_estimate,
    entropy_estimate,
    experiment_names,
    experiment_summary,
    hyp_distance,
    make_grid,
    natural_map,
    phi0_values,
    resolve_config,
    run_experiment,
    solve_barycenter,
    unit_comass_bound,
)

__all__ = [
    "Grid",
    "busemann",
    "comass_estimate",
    "entropy_estimate",
    "experiment_names",
    "experiment_summary",
    "hyp_distance",
    "make_grid",
    "natural_map",
    "phi0_values",
    "resolve_config",
    "run_experiment",
    "solve_barycenter",
    "unit_comass_bound",
]

__version__ = "0.1.0"
