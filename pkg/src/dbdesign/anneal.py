"""Simulated annealing over circular permutations.

One chain is strictly serial: per iteration a swap of two uniformly chosen
positions is proposed and evaluated incrementally in O(n).  A proposal that
beats the best value seen so far is always kept and recorded; a proposal at
least as bad as the current iterate survives a Metropolis draw at the
current temperature or is reverted; anything else (an improvement on the
current iterate that does not beat the best) is kept unconditionally.  The
temperature cools geometrically every iteration.

Determinism contract: the same (population, n, config) always produces the
same result.  Randomness comes from named PCG64 substreams of the config
seed: (seed, 1) shuffles the initial order, (seed, 2) drives the chain,
(seed, 3) drives temperature probing, and (seed, 5, i) derives the seed of
restart i > 0.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .core import CircularSequence, Population, compute_phi, seeded_rng
from .energy import expected_energy_fast, repulsion

logger = logging.getLogger(__name__)

_STREAM_SHUFFLE = 1
_STREAM_CHAIN = 2
_STREAM_PROBE = 3
_STREAM_RESTART = 5

T0_FLOOR = 1e-12


@dataclass
class AnnealConfig:
    """Schedule and seeding for one optimization run.

    ``t0`` and ``alpha`` accept the sentinel ``"auto"``: the initial
    temperature is then calibrated from probed swap magnitudes and the
    cooling rate from the target final-temperature ratio.
    """

    iterations: int = 1_000_000
    t0: float | str = "auto"
    alpha: float | str = "auto"
    seed: int = 0
    report_every: int = 10_000
    t_final_ratio: float = 1e-3

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.t0 != "auto" and not float(self.t0) > 0:
            raise ValueError("explicit t0 must be positive")
        if self.alpha != "auto" and not 0.0 < float(self.alpha) < 1.0:
            raise ValueError("explicit alpha must be in (0, 1)")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")
        if self.report_every < 1:
            raise ValueError("report_every must be >= 1")
        if not 0.0 < self.t_final_ratio < 1.0:
            raise ValueError("t_final_ratio must be in (0, 1)")


@dataclass
class AnnealResult:
    """Best-ever state of a run plus the final chain state and tallies."""

    best_sequence: CircularSequence
    best_objective: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    accepted_count: int = 0
    rejected_count: int = 0
    final_sequence: CircularSequence | None = None
    final_objective: float = float("nan")
    t0: float = float("nan")
    alpha: float = float("nan")


def auto_temperature(
    pop: Population,
    n: int,
    seed: int,
    probes: int = 100,
    sequence: CircularSequence | None = None,
) -> float:
    """Initial temperature such that a median-magnitude uphill move is
    accepted with probability about one half.

    Probes ``probes`` random swap proposals on ``sequence`` (identity order
    by default), takes the median |delta| and divides by ln 2.  Floored at
    1e-12 so degenerate populations still get a usable schedule.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    N = pop.n_units
    seq = sequence if sequence is not None else CircularSequence(np.arange(N), n)
    if seq.n != n or seq.n_units != N:
        raise ValueError("sequence does not match the population and block size")
    if N < 2:
        return T0_FLOOR
    rng = seeded_rng(seed, _STREAM_PROBE)
    c1 = 2.0 / (N * n * n)
    deltas = np.empty(probes)
    for i in range(probes):
        a = int(rng.integers(N))
        b = int(rng.integers(N - 1))
        if b >= a:
            b += 1
        deltas[i] = abs(c1 * _kernels.delta_r(pop.aux, seq.order, n, a, b))
    return max(float(np.median(deltas)) / math.log(2.0), T0_FLOOR)


def auto_alpha(t0: float, iterations: int, t_final_ratio: float = 1e-3) -> float:
    """Geometric cooling rate that lands at ``t_final_ratio * t0`` after
    ``iterations`` steps."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    if not 0.0 < t_final_ratio < 1.0:
        raise ValueError("t_final_ratio must be in (0, 1)")
    return t_final_ratio ** (1.0 / iterations)


def optimize(
    pop: Population,
    n: int,
    config: AnnealConfig,
    initial: CircularSequence | None = None,
) -> AnnealResult:
    """Anneal the circular order of ``pop`` to minimize the design-expected
    energy distance for block size ``n``.

    ``initial`` defaults to a seeded shuffle of the row order.  Returns the
    best sequence ever visited; the final chain state rides along for
    diagnostics.  For n = 1 or n = N every permutation scores the same, so
    the run warns and returns immediately.
    """
    N = pop.n_units
    if not 1 <= n <= N:
        raise ValueError(f"block size n={n} must be in 1..{N}")
    if initial is None:
        order0 = seeded_rng(config.seed, _STREAM_SHUFFLE).permutation(N).astype(np.int64)
        seq0 = CircularSequence(order0, n)
    else:
        if initial.n != n or initial.n_units != N:
            raise ValueError("initial sequence does not match the population and block size")
        seq0 = CircularSequence(initial.order.copy(), n)

    cache = compute_phi(pop)
    e0 = expected_energy_fast(repulsion(seq0, pop), cache, n)

    degenerate = n in (1, N)
    if degenerate:
        warnings.warn(
            f"objective is permutation-invariant for n={n} with N={N}; "
            "returning the initial sequence",
            stacklevel=2,
        )
    if degenerate or config.iterations == 0:
        return AnnealResult(
            best_sequence=seq0,
            best_objective=e0,
            trace=[(0, e0)],
            final_sequence=CircularSequence(seq0.order.copy(), n),
            final_objective=e0,
        )

    iterations = config.iterations
    t0 = (
        auto_temperature(pop, n, config.seed, sequence=seq0)
        if config.t0 == "auto"
        else float(config.t0)
    )
    alpha = (
        auto_alpha(t0, iterations, config.t_final_ratio)
        if config.alpha == "auto"
        else float(config.alpha)
    )

    rng = seeded_rng(config.seed, _STREAM_CHAIN)
    order = seq0.order.copy()
    best_order = order.copy()
    state = np.array([e0, e0, t0], dtype=np.float64)
    counts = np.zeros(2, dtype=np.int64)
    c1 = 2.0 / (N * n * n)
    trace = [(0, e0)]

    done = 0
    while done < iterations:
        step = min(config.report_every, iterations - done)
        randoms = rng.random(3 * step)
        _kernels.sa_chain(pop.aux, order, best_order, n, c1, alpha, state, counts, randoms)
        done += step
        trace.append((done, float(state[1])))
        logger.info(
            "iter=%d current=%.9g best=%.9g T=%.4g", done, state[0], state[1], state[2]
        )

    return AnnealResult(
        best_sequence=CircularSequence(best_order, n),
        best_objective=float(state[1]),
        trace=trace,
        accepted_count=int(counts[0]),
        rejected_count=int(counts[1]),
        final_sequence=CircularSequence(order, n),
        final_objective=float(state[0]),
        t0=t0,
        alpha=alpha,
    )


def restart_seed(seed: int, index: int) -> int:
    """Seed of restart ``index``; restart 0 runs the base seed unchanged."""
    if index == 0:
        return int(seed)
    ss = np.random.SeedSequence((int(seed), _STREAM_RESTART, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def optimize_restarts(
    pop: Population, n: int, config: AnnealConfig, restarts: int = 1
) -> AnnealResult:
    """Run independent chains with derived seeds and keep the best result.

    Chains run concurrently when the compiled kernels are available (they
    release the GIL); the merge is by lowest objective with ties going to
    the lowest restart index, so scheduling never changes the outcome.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    configs = [replace(config, seed=restart_seed(config.seed, i)) for i in range(restarts)]
    if restarts == 1:
        return optimize(pop, n, configs[0])
    if _kernels.HAVE_NUMBA:
        with ThreadPoolExecutor(max_workers=min(restarts, 8)) as pool:
            results = list(pool.map(lambda cfg: optimize(pop, n, cfg), configs))
    else:
        results = [optimize(pop, n, cfg) for cfg in configs]
    for i, res in enumerate(results):
        logger.info("restart %d: best=%.9g", i, res.best_objective)
    return min(enumerate(results), key=lambda item: (item[1].best_objective, item[0]))[1]
