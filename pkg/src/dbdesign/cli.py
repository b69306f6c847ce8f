"""Command-line front end: optimize / sample / eval / bench.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .anneal import AnnealConfig, optimize_restarts
from .core import (
    CircularSequence,
    DataError,
    Population,
    ingest,
    seeded_rng,
    standardize,
    synthetic_population,
    window,
)
from .designs import DesignSpec, block_dbd, stratum_rows
from .evaluate import METRIC_COLUMNS, monte_carlo

logger = logging.getLogger(__name__)

SEQUENCE_FORMAT_VERSION = 1


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


@dataclass
class RunConfig:
    """Parsed command configuration shared by all subcommands."""

    command: str
    input: str | None = None
    delimiter: str = ","
    aux: list[str] = field(default_factory=list)
    targets: list[str] = field(default_factory=list)
    strata: str | None = None
    n: int | None = None
    n_map: dict[int, int] | None = None
    seed: int = 0
    out: str = "."
    standardize: bool = True
    iterations: int = 1_000_000
    t0: float | str = "auto"
    alpha: float | str = "auto"
    restarts: int = 1
    report_every: int = 10_000
    designs: list[str] = field(default_factory=list)
    reps: int = 1000
    k: int = 2
    sequence: str | None = None
    count: int = 1
    enumerate: bool = False
    synthetic: tuple[int, int] | None = None


@dataclass
class SequenceFile:
    """Persisted optimized order: a versioned JSON document."""

    N: int
    n: int
    ids: list
    expected_energy: float
    optimizer: dict
    format_version: int = SEQUENCE_FORMAT_VERSION

    def save(self, path) -> Path:
        path = Path(path)
        payload = {
            "format_version": self.format_version,
            "N": self.N,
            "n": self.n,
            "ids": list(self.ids),
            "expected_energy": self.expected_energy,
            "optimizer": self.optimizer,
        }
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "SequenceFile":
        path = Path(path)
        if not path.exists():
            raise DataError(f"sequence file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"corrupt sequence file {path}: {exc}") from exc
        version = payload.get("format_version")
        if version != SEQUENCE_FORMAT_VERSION:
            raise DataError(
                f"unsupported sequence file version {version!r} in {path}"
            )
        try:
            sf = cls(
                N=int(payload["N"]),
                n=int(payload["n"]),
                ids=list(payload["ids"]),
                expected_energy=float(payload["expected_energy"]),
                optimizer=dict(payload.get("optimizer", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"corrupt sequence file {path}: {exc}") from exc
        if len(sf.ids) != sf.N or len(set(sf.ids)) != sf.N:
            raise DataError(f"corrupt sequence file {path}: ids are not a permutation")
        if not 1 <= sf.n <= sf.N:
            raise DataError(f"corrupt sequence file {path}: invalid block size")
        return sf

    def bind(self, pop: Population) -> CircularSequence:
        """Circular sequence over ``pop`` rows matching the stored id order."""
        row_of = {uid: i for i, uid in enumerate(pop.ids)}
        if set(self.ids) != set(row_of):
            raise DataError("sequence file ids do not match the ingested population")
        return CircularSequence(
            np.array([row_of[uid] for uid in self.ids], dtype=np.int64), self.n
        )


def _write_trace(trace, path) -> Path:
    path = Path(path)
    lines = ["iteration,best_energy"]
    lines += [f"{it},{val!r}" for it, val in trace]
    path.write_text("\n".join(lines) + "\n")
    return path


def _load_population(cfg: RunConfig) -> Population:
    if not cfg.input:
        raise UsageError("--input is required")
    if not cfg.aux:
        raise UsageError("--aux is required")
    pop = ingest(
        cfg.input,
        aux_columns=cfg.aux,
        target_columns=cfg.targets,
        strata_column=cfg.strata,
        delimiter=cfg.delimiter,
    )
    if cfg.standardize:
        try:
            pop = standardize(pop)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    return pop


def _anneal_config(cfg: RunConfig) -> AnnealConfig:
    return AnnealConfig(
        iterations=cfg.iterations,
        t0=cfg.t0,
        alpha=cfg.alpha,
        seed=cfg.seed,
        report_every=cfg.report_every,
    )


def _sequence_file(pop: Population, result, cfg: RunConfig, wall: float) -> SequenceFile:
    ids = [pop.ids[i] for i in result.best_sequence.order]
    return SequenceFile(
        N=pop.n_units,
        n=result.best_sequence.n,
        ids=ids,
        expected_energy=result.best_objective,
        optimizer={
            "iterations": cfg.iterations,
            "t0": result.t0,
            "alpha": result.alpha,
            "seed": cfg.seed,
            "restarts": cfg.restarts,
            "wall_time_s": wall,
        },
    )


def cmd_optimize(cfg: RunConfig) -> int:
    pop = _load_population(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _anneal_config(cfg)

    if cfg.n_map is not None:
        if pop.strata is None:
            raise UsageError("per-stratum --n requires --strata")
        start = time.perf_counter()
        try:
            results = block_dbd(pop, cfg.n_map, config)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        wall = time.perf_counter() - start
        rows = stratum_rows(pop)
        for h, res in results.items():
            sub = pop.subset(rows[h])
            sf = _sequence_file(sub, res, cfg, wall)
            sf.save(out / f"sequence_stratum_{h}.json")
            _write_trace(res.trace, out / f"trace_stratum_{h}.csv")
            logger.info("stratum %s: best=%.9g", h, res.best_objective)
        return 0

    if cfg.n is None:
        raise UsageError("--n is required")
    start = time.perf_counter()
    result = optimize_restarts(pop, cfg.n, config, restarts=cfg.restarts)
    wall = time.perf_counter() - start
    sf = _sequence_file(pop, result, cfg, wall)
    sf.save(out / "sequence.json")
    _write_trace(result.trace, out / "trace.csv")
    logger.info("best expected energy distance: %.9g", result.best_objective)
    return 0


def cmd_sample(cfg: RunConfig) -> int:
    sf = SequenceFile.load(cfg.sequence)
    seq = CircularSequence(np.arange(sf.N, dtype=np.int64), sf.n)
    ids = sf.ids

    def emit(j: int):
        s = window(seq, j)
        print(str(j) + " " + " ".join(str(ids[i]) for i in s.units))

    if cfg.enumerate:
        for j in range(1, sf.N + 1):
            emit(j)
        return 0
    rng = seeded_rng(cfg.seed)
    for _ in range(cfg.count):
        emit(int(rng.integers(1, sf.N + 1)))
    return 0


def _design_specs(cfg: RunConfig, pop: Population) -> list[DesignSpec]:
    kinds = cfg.designs
    if not kinds:
        raise UsageError("--designs must list at least one design")
    sequence = None
    n = cfg.n
    if "dbd" in kinds:
        if not cfg.sequence:
            raise UsageError("--sequence is required when designs include dbd")
        sf = SequenceFile.load(cfg.sequence)
        if n is None:
            n = sf.n
        elif n != sf.n:
            logger.warning(
                "using --n %d with a sequence optimized for n=%d", n, sf.n
            )
        sequence = CircularSequence(sf.bind(pop).order, n)
    if n is None:
        raise UsageError("--n is required")
    specs = []
    for kind in kinds:
        specs.append(
            DesignSpec(
                kind=kind,
                n=n,
                sequence=sequence if kind == "dbd" else None,
                seed=cfg.seed,
            )
        )
    return specs


def cmd_eval(cfg: RunConfig) -> int:
    pop = _load_population(cfg)
    try:
        specs = _design_specs(cfg, pop)
        report = monte_carlo(pop, specs, cfg.reps, targets=cfg.targets, k=cfg.k)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    samples_path, summary_path = report.write(cfg.out, delimiter=cfg.delimiter)
    logger.info("wrote %s and %s", samples_path, summary_path)
    return 0


def cmd_bench(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.synthetic is not None:
        N, p = cfg.synthetic
        pop = synthetic_population(N, p, seed=cfg.seed)
        cols = {"id": pop.ids}
        cols.update({name: pop.aux[:, c] for c, name in enumerate(pop.aux_names)})
        pd.DataFrame(cols).to_csv(out / "population.csv", index=False)
    else:
        pop = _load_population(cfg)
    if cfg.n is None:
        raise UsageError("--n is required")

    result = optimize_restarts(pop, cfg.n, _anneal_config(cfg), restarts=cfg.restarts)
    _write_trace(result.trace, out / "trace.csv")
    specs = [
        DesignSpec(kind="dbd", n=cfg.n, sequence=result.best_sequence, seed=cfg.seed),
        DesignSpec(kind="lpm", n=cfg.n, seed=cfg.seed),
        DesignSpec(kind="srs", n=cfg.n, seed=cfg.seed),
    ]
    try:
        report = monte_carlo(pop, specs, cfg.reps)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    table = report.summary[["design"] + [f"mean_{m}" for m in METRIC_COLUMNS]]
    table = table.rename(columns={f"mean_{m}": m for m in METRIC_COLUMNS})
    table.to_csv(out / "bench.csv", index=False)
    logger.info("optimized expected energy distance: %.9g", result.best_objective)
    return 0


def _parse_columns(text: str | None) -> list[str]:
    if not text:
        return []
    return [c.strip() for c in text.split(",") if c.strip()]


def _parse_n(text: str | None) -> tuple[int | None, dict[int, int] | None]:
    if text is None:
        return None, None
    if "=" in text:
        mapping = {}
        for part in text.split(","):
            label, _, value = part.partition("=")
            mapping[int(label.strip())] = int(value.strip())
        return None, mapping
    return int(text), None


def _parse_schedule(text: str) -> float | str:
    if text == "auto":
        return "auto"
    return float(text)


def _parse_synthetic(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("--synthetic expects N,p")
    return int(parts[0]), int(parts[1])


def _add_shared(parser: argparse.ArgumentParser):
    parser.add_argument("--input", help="delimited input file with a header row")
    parser.add_argument(
        "--delimiter",
        default=",",
        help='field delimiter; "," (default) or "tab"',
    )
    parser.add_argument("--aux", help="comma-separated auxiliary column names")
    parser.add_argument("--targets", help="comma-separated target column names")
    parser.add_argument("--strata", help="integer strata column name")
    parser.add_argument("--n", help="sample size, or label=n,... per stratum")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument(
        "--no-standardize",
        action="store_true",
        help="skip standardization of ingested auxiliary columns",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dbdesign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_opt = sub.add_parser("optimize", help="optimize a circular sequence")
    _add_shared(p_opt)
    p_opt.add_argument("--iters", type=int, default=1_000_000)
    p_opt.add_argument("--t0", default="auto", help='initial temperature or "auto"')
    p_opt.add_argument("--alpha", default="auto", help='cooling rate or "auto"')
    p_opt.add_argument("--restarts", type=int, default=1)
    p_opt.add_argument("--report-every", type=int, default=10_000)

    p_samp = sub.add_parser("sample", help="draw block samples from a sequence file")
    _add_shared(p_samp)
    p_samp.add_argument("--sequence", required=True)
    p_samp.add_argument("--count", type=int, default=1)
    p_samp.add_argument(
        "--enumerate", action="store_true", help="emit all N windows in order"
    )

    p_eval = sub.add_parser("eval", help="Monte Carlo evaluation of designs")
    _add_shared(p_eval)
    p_eval.add_argument("--designs", default="dbd,srs,lpm")
    p_eval.add_argument("--reps", type=int, default=1000)
    p_eval.add_argument("--k", type=int, default=2)
    p_eval.add_argument("--sequence")

    p_bench = sub.add_parser("bench", help="side-by-side design comparison table")
    _add_shared(p_bench)
    p_bench.add_argument("--synthetic", type=_parse_synthetic, help="N,p uniform population")
    p_bench.add_argument("--iters", type=int, default=1_000_000)
    p_bench.add_argument("--t0", default="auto")
    p_bench.add_argument("--alpha", default="auto")
    p_bench.add_argument("--restarts", type=int, default=1)
    p_bench.add_argument("--report-every", type=int, default=10_000)
    p_bench.add_argument("--reps", type=int, default=1000)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    delim = args.delimiter
    if delim == "tab":
        delim = "\t"
    n, n_map = _parse_n(getattr(args, "n", None))
    cfg = RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        delimiter=delim,
        aux=_parse_columns(getattr(args, "aux", None)),
        targets=_parse_columns(getattr(args, "targets", None)),
        strata=getattr(args, "strata", None),
        n=n,
        n_map=n_map,
        seed=args.seed,
        out=args.out,
        standardize=not getattr(args, "no_standardize", False),
    )
    if hasattr(args, "iters"):
        cfg.iterations = args.iters
        cfg.t0 = _parse_schedule(args.t0)
        cfg.alpha = _parse_schedule(args.alpha)
        cfg.restarts = args.restarts
        cfg.report_every = args.report_every
    if hasattr(args, "designs"):
        cfg.designs = _parse_columns(args.designs)
        cfg.reps = args.reps
        cfg.k = args.k
    if hasattr(args, "reps"):
        cfg.reps = args.reps
    if hasattr(args, "sequence"):
        cfg.sequence = args.sequence
    if hasattr(args, "count"):
        cfg.count = args.count
        cfg.enumerate = args.enumerate
    if hasattr(args, "synthetic"):
        cfg.synthetic = args.synthetic
    return cfg


_COMMANDS = {
    "optimize": cmd_optimize,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entry():  # console-script shim
    sys.exit(main())
