"""Design quality metrics, Horvitz-Thompson estimation, variance estimation,
and the Monte Carlo evaluation harness.

All auxiliary-space geometry (Voronoi cells, neighborhoods) uses Euclidean
distance on whatever aux matrix the population carries; standardize first if
the columns have incommensurate units.  Nearest-neighbor ties always resolve
to the lowest unit id, so every metric is a deterministic function of the
sample alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from .core import DistanceCache, Population, Sample, compute_phi, seeded_rng
from .designs import DesignSpec, draw_lpm, draw_srs, enumerate_design
from .energy import energy_distance

CI_MULTIPLIER = 1.96  # two-sided 95 percent normal interval
_STREAM_REPLICATE = 9

METRIC_COLUMNS = ("energy", "sb", "lb", "bd")


@dataclass
class VoronoiAssignment:
    """For each population unit, the unit id of its nearest sample unit."""

    owner: np.ndarray


def voronoi(sample: Sample, pop: Population) -> VoronoiAssignment:
    """Assign every population unit to its nearest sample unit.

    Ties go to the lowest sample-unit id; sample units own themselves.
    """
    su = np.sort(sample.units)
    dist = cdist(pop.aux, pop.aux[su])
    owner = su[np.argmin(dist, axis=1)]
    owner[su] = su
    return VoronoiAssignment(owner=owner)


def spatial_balance(sample: Sample, pop: Population) -> float:
    """Mean squared deviation of Voronoi-cell probability mass from 1."""
    owner = voronoi(sample, pop).owner
    v = np.array(
        [np.count_nonzero(owner == u) for u in sample.units], dtype=np.float64
    )
    v *= sample.pi
    return float(np.mean((v - 1.0) ** 2))


def local_balance(sample: Sample, pop: Population) -> float:
    """Root mean squared discrepancy of the neighborhood balancing equations.

    Uses the augmented matrix Z = [1, aux] and its Gram matrix Q; Q is
    inverted with a pseudo-inverse (singular values below 1e-10 of the
    largest are treated as zero), so collinear aux columns stay finite.
    """
    N = pop.n_units
    Z = np.column_stack([np.ones(N), pop.aux])
    q_inv = np.linalg.pinv(Z.T @ Z, rcond=1e-10)
    owner = voronoi(sample, pop).owner
    total = 0.0
    for u in sample.units:
        e = Z[u] / sample.pi - Z[owner == u].sum(axis=0)
        total += float(e @ q_inv @ e)
    return float(np.sqrt(max(total, 0.0) / N))


def balance_deviation(sample: Sample, pop: Population) -> float:
    """Euclidean distance between HT-estimated and true auxiliary totals."""
    estimated = pop.aux[sample.units].sum(axis=0) / sample.pi
    return float(np.linalg.norm(estimated - pop.aux.sum(axis=0)))


def ht_total(sample: Sample, y: np.ndarray) -> float:
    """Horvitz-Thompson estimator of the total of ``y`` (full column)."""
    y = np.asarray(y, dtype=np.float64)
    return float(y[sample.units].sum() / sample.pi)


def local_mean_variance(
    sample: Sample, y: np.ndarray, k: int, pop: Population
) -> float:
    """Neighborhood-based variance estimator for the HT total.

    Each sample unit is compared with the mean of its k nearest sample
    units (itself included; ties to the lowest unit id):

        vhat = N^2 / n * k / (n (k - 1)) * sum_i (y_i - ybar_i)^2

    With k = n this is exactly the classical N^2 s^2 / n estimator.
    """
    units = sample.units
    n = units.size
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    y = np.asarray(y, dtype=np.float64)
    N = pop.n_units
    Xs = pop.aux[units]
    dist = cdist(Xs, Xs)
    ys = y[units]
    total = 0.0
    for pos in range(n):
        d = dist[pos].copy()
        d[pos] = -1.0  # the unit itself always belongs to its neighborhood
        group = np.lexsort((units, d))[:k]
        total += (ys[pos] - ys[group].mean()) ** 2
    s2 = k / (n * (k - 1)) * total
    return float(N * N * s2 / n)


def energy_kernel(x: np.ndarray, y: np.ndarray, z0: np.ndarray) -> float:
    """Reproducing kernel of the energy distance with base point z0:
    k(x, y) = ||x - z0|| + ||y - z0|| - ||x - y||."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z0 = np.asarray(z0, dtype=np.float64)
    return float(
        np.linalg.norm(x - z0) + np.linalg.norm(y - z0) - np.linalg.norm(x - y)
    )


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_rkhs_bound(
    sample: Sample,
    pop: Population,
    witness: np.ndarray | None = None,
    z0: np.ndarray | None = None,
    cache: DistanceCache | None = None,
) -> BoundCheck:
    """Per-sample squared-error bound for kernel-section targets.

    With y_i = k(witness, x_i) the HT error obeys
    (ht - Y)^2 <= N^2 k(witness, witness) * energy_distance(sample).
    Returns both sides and whether the inequality holds (with 1e-9 relative
    slack for rounding).  The witness defaults to the first population
    point, the kernel base point to the origin.
    """
    if witness is None:
        witness = pop.aux[0]
    witness = np.asarray(witness, dtype=np.float64)
    if z0 is None:
        z0 = np.zeros(pop.n_aux)
    z0 = np.asarray(z0, dtype=np.float64)
    if cache is None:
        cache = compute_phi(pop)
    norm_w = np.linalg.norm(pop.aux - witness, axis=1)
    norm_0 = np.linalg.norm(pop.aux - z0, axis=1)
    y = float(np.linalg.norm(witness - z0)) + norm_0 - norm_w
    estimate = ht_total(sample, y)
    total = float(y.sum())
    lhs = (estimate - total) ** 2
    rhs = (
        pop.n_units**2
        * energy_kernel(witness, witness, z0)
        * energy_distance(sample, cache, pop)
    )
    return BoundCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs * (1.0 + 1e-9)))


@dataclass
class MetricsReport:
    """Per-sample metric rows and their per-design summary.

    ``per_sample`` columns: design, rep, energy, sb, lb, bd, then per target
    ht_<t>, vhat_<t>, covered_<t>.  ``summary`` has one row per design with
    mean_/sd_ columns for each metric plus rrmse_<t> and coverage_<t>.
    """

    per_sample: pd.DataFrame
    summary: pd.DataFrame

    def write(self, out_dir, delimiter: str = ",") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        samples_path = out / "samples.csv"
        summary_path = out / "summary.csv"
        # %.17g round-trips doubles exactly, so oracle checks can re-read files
        self.per_sample.to_csv(samples_path, sep=delimiter, index=False, float_format="%.17g")
        self.summary.to_csv(summary_path, sep=delimiter, index=False, float_format="%.17g")
        return samples_path, summary_path


def _iter_samples(spec: DesignSpec, pop: Population, reps: int):
    """Yield (rep, sample) pairs; the circular design enumerates its full
    support, stochastic designs draw ``reps`` independent replicates."""
    if spec.kind == "dbd":
        for j, sample in enumerate(enumerate_design(spec.sequence), start=1):
            yield j, sample
        return
    for rep in range(1, reps + 1):
        rng = seeded_rng(spec.seed, _STREAM_REPLICATE, rep)
        if spec.kind == "srs":
            yield rep, draw_srs(pop.n_units, spec.n, rng)
        else:
            yield rep, draw_lpm(pop, spec.n, rng)


def monte_carlo(
    pop: Population,
    designs: list[DesignSpec],
    reps: int,
    targets: list[str] | None = None,
    k: int = 2,
) -> MetricsReport:
    """Evaluate each design on the four balance metrics and, per target, the
    HT total with its variance estimate and CI coverage indicator.

    Replicate r of a stochastic design uses the stream (design seed, 9, r),
    so results are independent of evaluation order.  SRS rows use the
    classical variance estimator (the k = n case); spread designs use the
    local estimator with the given k.
    """
    targets = list(targets or [])
    if reps < 1:
        raise ValueError("reps must be >= 1")
    for t in targets:
        if t not in pop.targets:
            raise ValueError(f"unknown target column {t!r}")
    cache = compute_phi(pop)
    totals = {t: float(pop.targets[t].sum()) for t in targets}

    rows = []
    for spec in designs:
        if not 1 <= spec.n <= pop.n_units:
            raise ValueError(f"design n={spec.n} out of range 1..{pop.n_units}")
        if spec.kind == "dbd" and spec.sequence.n_units != pop.n_units:
            raise ValueError("dbd sequence length does not match the population")
        for rep, sample in _iter_samples(spec, pop, reps):
            row = {
                "design": spec.kind,
                "rep": rep,
                "energy": energy_distance(sample, cache, pop),
                "sb": spatial_balance(sample, pop),
                "lb": local_balance(sample, pop),
                "bd": balance_deviation(sample, pop),
            }
            for t in targets:
                y = pop.targets[t]
                estimate = ht_total(sample, y)
                k_eff = sample.size if spec.kind == "srs" else k
                vhat = local_mean_variance(sample, y, k_eff, pop)
                half = CI_MULTIPLIER * np.sqrt(vhat)
                row[f"ht_{t}"] = estimate
                row[f"vhat_{t}"] = vhat
                row[f"covered_{t}"] = int(abs(estimate - totals[t]) <= half)
            rows.append(row)
    per_sample = pd.DataFrame(rows)

    summary_rows = []
    for spec in designs:
        mask = (per_sample["design"] == spec.kind).to_numpy()
        entry = {"design": spec.kind, "rows": int(mask.sum())}
        for col in METRIC_COLUMNS:
            vals = per_sample.loc[mask, col].to_numpy()
            entry[f"mean_{col}"] = float(np.mean(vals))
            entry[f"sd_{col}"] = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        for t in targets:
            estimates = per_sample.loc[mask, f"ht_{t}"].to_numpy()
            entry[f"rrmse_{t}"] = float(
                np.sqrt(np.mean((estimates - totals[t]) ** 2)) / totals[t]
            )
            entry[f"coverage_{t}"] = float(
                np.mean(per_sample.loc[mask, f"covered_{t}"].to_numpy())
            )
        summary_rows.append(entry)
    return MetricsReport(per_sample=per_sample, summary=pd.DataFrame(summary_rows))


def coverage(
    pop: Population, design: DesignSpec, target: str, reps: int, k: int
) -> float:
    """Fraction of replicates whose 95 percent CI contains the true total."""
    report = monte_carlo(pop, [design], reps, targets=[target], k=k)
    return float(report.summary[f"coverage_{target}"].iloc[0])
