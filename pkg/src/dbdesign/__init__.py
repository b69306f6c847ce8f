"""Distributionally balanced sampling designs.

Builds equal-probability designs by optimizing a circular population
ordering so that every contiguous block of n units mirrors the population's
auxiliary distribution (measured by energy distance), and evaluates such
designs against simple random sampling and the local pivotal method.
"""

from .anneal import (
    AnnealConfig,
    AnnealResult,
    auto_alpha,
    auto_temperature,
    optimize,
    optimize_restarts,
)
from .core import (
    CircularSequence,
    DataError,
    DistanceCache,
    Population,
    Sample,
    compute_phi,
    ingest,
    seeded_rng,
    standardize,
    synthetic_population,
    window,
)
from .designs import (
    DesignSpec,
    block_dbd,
    draw_block_dbd,
    draw_dbd,
    draw_lpm,
    draw_srs,
    enumerate_design,
    stratum_rows,
)
from .energy import (
    ObjectiveState,
    energy_distance,
    expected_energy_bruteforce,
    expected_energy_fast,
    repulsion,
    swap_delta,
    window_weight,
)
from .evaluate import (
    BoundCheck,
    MetricsReport,
    VoronoiAssignment,
    balance_deviation,
    check_rkhs_bound,
    coverage,
    energy_kernel,
    ht_total,
    local_balance,
    local_mean_variance,
    monte_carlo,
    spatial_balance,
    voronoi,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "BoundCheck",
    "CircularSequence",
    "DataError",
    "DesignSpec",
    "DistanceCache",
    "MetricsReport",
    "ObjectiveState",
    "Population",
    "Sample",
    "VoronoiAssignment",
    "auto_alpha",
    "auto_temperature",
    "balance_deviation",
    "block_dbd",
    "check_rkhs_bound",
    "compute_phi",
    "coverage",
    "draw_block_dbd",
    "draw_dbd",
    "draw_lpm",
    "draw_srs",
    "energy_distance",
    "energy_kernel",
    "enumerate_design",
    "expected_energy_bruteforce",
    "expected_energy_fast",
    "ht_total",
    "ingest",
    "local_balance",
    "local_mean_variance",
    "monte_carlo",
    "optimize",
    "optimize_restarts",
    "repulsion",
    "seeded_rng",
    "spatial_balance",
    "standardize",
    "stratum_rows",
    "swap_delta",
    "synthetic_population",
    "voronoi",
    "window",
    "window_weight",
]
