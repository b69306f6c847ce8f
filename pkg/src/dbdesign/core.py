"""Population data model, ingestion, standardization, and window extraction.

Conventions used throughout the package:

* Unit rows are 0-based indices into ``Population.aux``.
* Positions on the circular sequence are 1-based (``1..N``) wherever they
  appear in a public signature (``window``, ``swap_delta``, sample listings).
  The block for start position ``j`` begins at sequence position
  ``(j mod N) + 1``.  Because ``j`` is drawn uniformly over all N positions,
  the design is identical to one whose blocks begin at ``j`` itself; the
  convention is kept so that persisted start positions are unambiguous.
* All operations here are pure: inputs are never mutated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)


class DataError(Exception):
    """Unusable input data or a corrupt/incompatible artifact file."""


def seeded_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream identified by ``(seed, *key)``.

    Streams with distinct keys are statistically independent, and the same
    ``(seed, *key)`` always yields the same stream (the package-wide
    determinism contract rests on this).
    """
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class Population:
    """A finite population with known auxiliary vectors.

    ``aux`` is the N x p matrix of auxiliary variables; distances between
    units are always Euclidean distances between its rows.  Optional named
    target columns and integer strata labels ride along untouched by the
    auxiliary-space math.
    """

    ids: list
    aux: np.ndarray
    targets: dict[str, np.ndarray] = field(default_factory=dict)
    strata: np.ndarray | None = None
    aux_names: list[str] | None = None

    def __post_init__(self):
        aux = np.ascontiguousarray(np.asarray(self.aux, dtype=np.float64))
        if aux.ndim == 1:
            aux = aux.reshape(-1, 1)
        if aux.ndim != 2 or aux.shape[0] < 1 or aux.shape[1] < 1:
            raise ValueError("aux must be a nonempty 2-d matrix")
        if not np.all(np.isfinite(aux)):
            raise ValueError("auxiliary values must be finite")
        self.aux = aux
        n, p = aux.shape
        self.ids = list(self.ids)
        if len(self.ids) != n:
            raise ValueError("ids length must match the number of aux rows")
        if len(set(self.ids)) != n:
            raise ValueError("unit ids must be unique")
        if self.aux_names is None:
            self.aux_names = [f"x{c + 1}" for c in range(p)]
        elif len(self.aux_names) != p:
            raise ValueError("aux_names length must match the number of aux columns")
        targets = {}
        for name, col in self.targets.items():
            arr = np.asarray(col, dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"target column {name!r} must have length {n}")
            targets[name] = arr
        self.targets = targets
        if self.strata is not None:
            strata = np.asarray(self.strata, dtype=np.int64)
            if strata.shape != (n,):
                raise ValueError("strata labels must have one entry per unit")
            self.strata = strata

    @property
    def n_units(self) -> int:
        return self.aux.shape[0]

    @property
    def n_aux(self) -> int:
        return self.aux.shape[1]

    def subset(self, rows: np.ndarray) -> "Population":
        """New Population restricted to the given unit rows (in that order)."""
        rows = np.asarray(rows, dtype=np.int64)
        return Population(
            ids=[self.ids[i] for i in rows],
            aux=self.aux[rows],
            targets={k: v[rows] for k, v in self.targets.items()},
            strata=None if self.strata is None else self.strata[rows],
            aux_names=list(self.aux_names),
        )


@dataclass
class CircularSequence:
    """A permutation of unit rows arranged on a circle, plus the block size."""

    order: np.ndarray
    n: int

    def __post_init__(self):
        order = np.ascontiguousarray(np.asarray(self.order, dtype=np.int64))
        if order.ndim != 1 or order.size < 1:
            raise ValueError("order must be a nonempty 1-d index vector")
        size = order.size
        if order.min() < 0 or order.max() >= size or np.bincount(order, minlength=size).max() > 1:
            raise ValueError("order must be a permutation of 0..N-1")
        self.order = order
        self.n = int(self.n)
        if not 1 <= self.n <= size:
            raise ValueError(f"block size n={self.n} must be in 1..{size}")

    @property
    def n_units(self) -> int:
        return self.order.size


@dataclass
class DistanceCache:
    """Per-unit mean distances to the population and their overall mean."""

    phi: np.ndarray
    pop_self: float


@dataclass
class Sample:
    """An equal-probability fixed-size sample: unit rows plus the common
    inclusion probability n/N."""

    units: np.ndarray
    pi: float

    def __post_init__(self):
        units = np.ascontiguousarray(np.asarray(self.units, dtype=np.int64))
        if units.ndim != 1 or units.size < 1:
            raise ValueError("a sample must contain at least one unit")
        if np.unique(units).size != units.size:
            raise ValueError("sample units must be distinct")
        self.units = units
        self.pi = float(self.pi)
        if not 0.0 < self.pi <= 1.0:
            raise ValueError("inclusion probability must be in (0, 1]")

    @property
    def size(self) -> int:
        return self.units.size


def ingest(
    path,
    aux_columns: list[str],
    target_columns: list[str] | None = None,
    strata_column: str | None = None,
    delimiter: str = ",",
) -> Population:
    """Read a delimited text file with a header row into a Population.

    Rows with a missing value in any requested column are dropped (the count
    is logged).  A non-empty cell that does not parse as a number in a
    numeric column is an error, as are unknown column names and files that
    leave zero usable rows.  Unit ids are the 0-based data-row numbers of
    the surviving rows, so they remain stable references into the file.
    """
    target_columns = list(target_columns or [])
    aux_columns = list(aux_columns)
    if not aux_columns:
        raise DataError("at least one auxiliary column is required")
    fpath = Path(path)
    if not fpath.exists():
        raise DataError(f"input file not found: {fpath}")
    try:
        # round_trip parsing keeps re-read outputs bit-identical to what was
        # computed, which downstream consistency checks rely on
        df = pd.read_csv(fpath, sep=delimiter, float_precision="round_trip")
    except Exception as exc:
        raise DataError(f"could not parse {fpath}: {exc}") from exc

    requested = aux_columns + target_columns + ([strata_column] if strata_column else [])
    missing = [c for c in requested if c not in df.columns]
    if missing:
        raise DataError(f"unknown column(s): {', '.join(missing)}")

    numeric = {}
    for col in requested:
        raw = df[col]
        vals = pd.to_numeric(raw, errors="coerce")
        bad = vals.isna() & raw.notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataError(
                f"non-numeric value {raw.iloc[row]!r} in column {col!r} (data row {row})"
            )
        numeric[col] = vals.to_numpy(dtype=np.float64)

    keep = ~np.logical_or.reduce([np.isnan(numeric[c]) for c in requested])
    dropped = int(len(df) - keep.sum())
    if dropped:
        logger.info("dropped %d of %d rows with missing values", dropped, len(df))
    if not keep.any():
        raise DataError("zero usable rows after dropping missing values")

    rows = np.flatnonzero(keep)
    aux = np.column_stack([numeric[c][rows] for c in aux_columns])
    targets = {c: numeric[c][rows] for c in target_columns}
    strata = None
    if strata_column:
        svals = numeric[strata_column][rows]
        if not np.all(svals == np.floor(svals)):
            raise DataError(f"strata column {strata_column!r} must hold integer labels")
        strata = svals.astype(np.int64)
    return Population(
        ids=[int(r) for r in rows],
        aux=aux,
        targets=targets,
        strata=strata,
        aux_names=aux_columns,
    )


def standardize(pop: Population) -> Population:
    """Center each aux column at 0 and scale it to sample sd 1 (denominator N-1).

    Targets and strata are untouched.  A constant column has no spread to
    divide by and raises a ValueError naming it.
    """
    if pop.n_units < 2:
        raise ValueError("standardize requires at least two units")
    mean = pop.aux.mean(axis=0)
    sd = pop.aux.std(axis=0, ddof=1)
    dead = np.flatnonzero(sd == 0.0)
    if dead.size:
        names = ", ".join(pop.aux_names[c] for c in dead)
        raise ValueError(f"constant auxiliary column(s) cannot be standardized: {names}")
    return replace(pop, aux=(pop.aux - mean) / sd)


def compute_phi(pop: Population) -> DistanceCache:
    """Mean Euclidean distance from every unit to the whole population.

    phi[i] averages over all N units including the zero i-to-i term.  Work
    is O(N^2 p) but the full N x N distance matrix is never materialized;
    distances are reduced in row blocks.
    """
    X = pop.aux
    N = X.shape[0]
    phi = np.empty(N, dtype=np.float64)
    block = max(1, int(2**23 // N))
    for s in range(0, N, block):
        phi[s : s + block] = cdist(X[s : s + block], X).mean(axis=1)
    return DistanceCache(phi=phi, pop_self=float(phi.mean()))


def window(seq: CircularSequence, j: int) -> Sample:
    """The contiguous block of ``seq.n`` units for start position ``j`` (1-based).

    Positions follow the circular indexing rule ``((j + k - 1) mod N) + 1``
    for ``k = 1..n``, so the block begins at position ``(j mod N) + 1``.
    """
    N = seq.n_units
    if not 1 <= j <= N:
        raise ValueError(f"start position {j} out of range 1..{N}")
    idx = (j + np.arange(seq.n, dtype=np.int64)) % N
    return Sample(units=seq.order[idx], pi=seq.n / N)


def synthetic_population(N: int, p: int, seed: int = 0) -> Population:
    """Uniform-on-[0,1]^p synthetic population with ids 0..N-1."""
    if N < 1 or p < 1:
        raise ValueError("need N >= 1 and p >= 1")
    rng = np.random.default_rng(seed)
    return Population(ids=list(range(N)), aux=rng.random((N, p)))
