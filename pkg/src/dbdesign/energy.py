"""Energy-distance mathematics for circular block designs.

The per-sample statistic compares the empirical auxiliary distribution of a
sample against the population's:

    dist(F_s, F_U) = 2 E||X - Z|| - E||X - X'|| - E||Z - Z'||

with X, X' drawn from the sample and Z, Z' from the population.  For the
circular design the average of this statistic over all N contiguous blocks
decomposes into a permutation-free attraction part and a permutation-
dependent repulsion part:

    expected_energy = mean(phi) - 2 R(u) / (N n^2)

where R(u) is the window-weighted sum of pairwise distances.  Swapping two
positions changes R by a sum over at most 4(n-1) neighbor pairs, which is
what makes long optimization runs cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import _kernels
from .core import CircularSequence, DistanceCache, Population, Sample, window

# Values provably nonnegative are snapped to zero below this magnitude to
# absorb floating-point cancellation.
ZERO_CLAMP = 1e-12


def window_weight(t: int, n: int, N: int) -> int:
    """Number of size-n contiguous circular blocks containing two positions
    at offset ``t`` (1 <= t <= N-1; offsets t and N-t are equivalent).

    Equals ``n - t`` on one side plus ``n - (N - t)`` on the other when each
    is positive.  For block sizes up to half the circle only the first term
    survives, which is the familiar ``n - t`` triangular weight.
    """
    if not 1 <= t <= N - 1:
        raise ValueError(f"offset {t} out of range 1..{N - 1}")
    if not 1 <= n <= N:
        raise ValueError(f"block size {n} out of range 1..{N}")
    return max(n - t, 0) + max(n - (N - t), 0)


def _contributing_offsets(n: int, N: int):
    yield from range(1, n)
    yield from range(max(N - n + 1, n), N)


def energy_distance(sample: Sample, cache: DistanceCache, pop: Population) -> float:
    """Energy distance between the sample's empirical auxiliary distribution
    and the population's.

    Nonnegative by construction; magnitudes below 1e-12 (pure cancellation
    noise, e.g. for a census sample) are returned as exactly 0.
    """
    if cache.phi.shape[0] != pop.n_units:
        raise ValueError("distance cache does not match the population size")
    units = sample.units
    if units.min() < 0 or units.max() >= pop.n_units:
        raise ValueError("sample units out of range for this population")
    n = units.size
    attraction = 2.0 * float(cache.phi[units].mean())
    Xs = pop.aux[units]
    within = float(cdist(Xs, Xs).sum()) / (n * n)
    value = attraction - within - cache.pop_self
    if abs(value) < ZERO_CLAMP:
        return 0.0
    return value


def expected_energy_bruteforce(
    seq: CircularSequence, cache: DistanceCache, pop: Population
) -> float:
    """Design-expected energy distance by direct enumeration of all N blocks.

    O(N n^2 p) work; this is the reference the fast decomposition is tested
    against.
    """
    N = seq.n_units
    total = 0.0
    for j in range(1, N + 1):
        total += energy_distance(window(seq, j), cache, pop)
    return total / N


def repulsion(seq: CircularSequence, pop: Population) -> float:
    """Window-weighted sum of pairwise distances R(u).

    Equals the enumeration sum of within-block pairwise distances over all N
    blocks, computed in O(N n p) via per-offset weights.  Each unordered pair
    appears as two forward offsets (t and N-t), hence the half factor.
    """
    order = seq.order
    n = seq.n
    N = order.size
    if N < 2:
        return 0.0
    Xo = pop.aux[order]
    total = 0.0
    for t in _contributing_offsets(n, N):
        w = window_weight(t, n, N)
        diffs = Xo - np.roll(Xo, -t, axis=0)
        total += 0.5 * w * float(np.sqrt((diffs * diffs).sum(axis=1)).sum())
    return total


def expected_energy_fast(repulsion_value: float, cache: DistanceCache, n: int) -> float:
    """Design-expected energy distance from a precomputed repulsion value."""
    N = cache.phi.shape[0]
    value = cache.pop_self - 2.0 * repulsion_value / (N * n * n)
    if abs(value) < ZERO_CLAMP:
        return 0.0
    return value


def swap_delta(seq: CircularSequence, a: int, b: int, pop: Population) -> float:
    """Exact change in the expected energy distance if positions ``a`` and
    ``b`` (1-based) swapped their units.

    Costs O(n p): only pairs within window reach of a or b can change, and
    the (a, b) pair itself is invariant.  The sequence is not modified.
    """
    N = seq.n_units
    if a == b:
        raise ValueError("swap positions must differ")
    for pos in (a, b):
        if not 1 <= pos <= N:
            raise ValueError(f"position {pos} out of range 1..{N}")
    d_r = _kernels.delta_r(pop.aux, seq.order, seq.n, a - 1, b - 1)
    return -2.0 * d_r / (N * seq.n * seq.n)


@dataclass
class ObjectiveState:
    """Repulsion and expected energy for one sequence, tied by the identity
    ``expected_energy = pop_self - 2 repulsion / (N n^2)``."""

    repulsion: float
    expected_energy: float
    n: int
    cache: DistanceCache

    @classmethod
    def from_sequence(
        cls, seq: CircularSequence, cache: DistanceCache, pop: Population
    ) -> "ObjectiveState":
        r = repulsion(seq, pop)
        return cls(
            repulsion=r,
            expected_energy=expected_energy_fast(r, cache, seq.n),
            n=seq.n,
            cache=cache,
        )
