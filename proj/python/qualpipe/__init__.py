"""Python bindings for the qualpipe evaluation core.

The heavy lifting (metrics, priors, the exact assignment solver, chart
rendering) lives in the compiled ``_core`` extension; this package re-exports
its functions.
"""

from ._core import (
    __version__,
    brute_force_assignment,
    calibration_distance,
    compute_bounds,
    compute_priors,
    exact_match,
    parse_numbered_list,
    render_bar_chart,
    rouge_l,
    solve_assignment,
)

__all__ = [
    "__version__",
    "brute_force_assignment",
    "calibration_distance",
    "compute_bounds",
    "compute_priors",
    "exact_match",
    "parse_numbered_list",
    "render_bar_chart",
    "rouge_l",
    "solve_assignment",
]
