"""Penalized-likelihood order estimation for location mixtures.

Thin wrapper over the C++ core; see the project README for the CLI and
experiment runners.
"""

from ._mixsel import (
    Dataset,
    DegenerateWeightingError,
    FitResult,
    GridTooSmallError,
    InvalidModelError,
    LocationFamily,
    MixtureParams,
    OrderEstimate,
    OrderRow,
    QuadratureGrid,
    __version__,
    build_grid,
    chi_square,
    estimate_order,
    eval_log_density,
    fit,
    hellinger,
    kl,
    penalty_value,
    pseudodistance,
    read_csv,
    sample,
    sieve_radius,
    write_csv,
)

__all__ = [
    "Dataset",
    "DegenerateWeightingError",
    "FitResult",
    "GridTooSmallError",
    "InvalidModelError",
    "LocationFamily",
    "MixtureParams",
    "OrderEstimate",
    "OrderRow",
    "QuadratureGrid",
    "__version__",
    "build_grid",
    "chi_square",
    "estimate_order",
    "eval_log_density",
    "fit",
    "hellinger",
    "kl",
    "penalty_value",
    "pseudodistance",
    "read_csv",
    "sample",
    "sieve_radius",
    "write_csv",
]
