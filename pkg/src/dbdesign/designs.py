"""Sample selection: the circular block design, SRS and local-pivotal
baselines, and the stratified block mode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .anneal import AnnealConfig, AnnealResult, optimize
from .core import CircularSequence, Population, Sample, window

DESIGN_KINDS = ("dbd", "srs", "lpm")


@dataclass
class DesignSpec:
    """One design to draw from or enumerate: kind, sample size, the
    optimized sequence (dbd only), and the seed of its replicate streams."""

    kind: str
    n: int
    sequence: CircularSequence | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}; expected one of {DESIGN_KINDS}")
        if self.kind == "dbd":
            if self.sequence is None:
                raise ValueError("dbd design requires a circular sequence")
            if self.sequence.n != self.n:
                raise ValueError("sequence block size does not match the design n")


def draw_dbd(seq: CircularSequence, rng: np.random.Generator) -> Sample:
    """One block sample: uniform start position over 1..N, then the window."""
    j = int(rng.integers(1, seq.n_units + 1))
    return window(seq, j)


def enumerate_design(seq: CircularSequence) -> list[Sample]:
    """All N block samples of the design, in start-position order.

    This is the complete support: averaging a statistic over it is the exact
    design expectation.
    """
    return [window(seq, j) for j in range(1, seq.n_units + 1)]


def draw_srs(N: int, n: int, rng: np.random.Generator) -> Sample:
    """Simple random sample without replacement, uniform over all C(N, n)
    subsets."""
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    return Sample(units=rng.choice(N, size=n, replace=False), pi=n / N)


def draw_lpm(pop: Population, n: int, rng: np.random.Generator) -> Sample:
    """Local pivotal sample (LPM1 variant).

    Repeatedly picks a random undecided unit, finds its nearest undecided
    neighbor in auxiliary space, and if the two are mutual nearest neighbors
    transfers inclusion probability between them until one resolves to 0
    or 1.  Nearest-neighbor ties go to the lowest unit id, which makes the
    draw a deterministic function of the RNG stream.
    """
    N = pop.n_units
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    if n == N:
        return Sample(units=np.arange(N, dtype=np.int64), pi=1.0)
    prob = np.full(N, n / N, dtype=np.float64)
    und = np.arange(N, dtype=np.int64)
    state = np.array([N], dtype=np.int64)
    block = 2 * (8 * N + 64)
    while state[0] > 1:
        _kernels.lpm_chain(pop.aux, prob, und, state, rng.random(block))
    if state[0] == 1:
        # Mass conservation leaves at most rounding noise here; resolve it.
        last = int(und[0])
        if 0.0 < prob[last] < 1.0:
            prob[last] = 1.0 if rng.random() < prob[last] else 0.0
    units = np.flatnonzero(prob > 0.5).astype(np.int64)
    if units.size != n:
        raise RuntimeError(
            f"pivotal resolution produced {units.size} units instead of {n}"
        )
    return Sample(units=units, pi=n / N)


def stratum_rows(pop: Population) -> dict[int, np.ndarray]:
    """Unit rows per stratum label, labels sorted ascending."""
    if pop.strata is None:
        raise ValueError("population has no strata labels")
    return {int(h): np.flatnonzero(pop.strata == h) for h in np.unique(pop.strata)}


def block_dbd(
    pop: Population, n_per_stratum: dict[int, int], config: AnnealConfig
) -> dict[int, AnnealResult]:
    """Optimize one circular sequence per stratum, independently.

    Every stratum label must appear in ``n_per_stratum`` with n_h <= N_h.
    Each stratum runs with the same config (including the seed), so a
    single-stratum population reduces exactly to a plain ``optimize`` call.
    Returned sequences index rows of the stratum subpopulation; use
    ``stratum_rows`` (or ``draw_block_dbd``) to map back to global rows.
    """
    rows = stratum_rows(pop)
    missing = sorted(set(rows) - set(int(k) for k in n_per_stratum))
    if missing:
        raise ValueError(f"no sample size given for strata: {missing}")
    unknown = sorted(set(int(k) for k in n_per_stratum) - set(rows))
    if unknown:
        raise ValueError(f"sample sizes given for unknown strata: {unknown}")
    for h, r in rows.items():
        if not 1 <= int(n_per_stratum[h]) <= r.size:
            raise ValueError(
                f"stratum {h}: n_h={n_per_stratum[h]} out of range 1..{r.size}"
            )
    results = {}
    for h in sorted(rows):
        results[h] = optimize(pop.subset(rows[h]), int(n_per_stratum[h]), config)
    return results


def draw_block_dbd(
    pop: Population, results: dict[int, AnnealResult], rng: np.random.Generator
) -> dict[int, Sample]:
    """One combined stratified draw: an independent start per stratum.

    Returned samples hold global unit rows; within stratum h every unit
    carries pi = n_h / N_h.
    """
    rows = stratum_rows(pop)
    out = {}
    for h in sorted(results):
        local = draw_dbd(results[h].best_sequence, rng)
        out[h] = Sample(units=rows[h][local.units], pi=local.pi)
    return out
