"""Command-line interface: ``ledger-obata {solve,classify,verify,catalog,bounds,standard}``.

Exit codes: 0 success, 1 verification mismatch, 2 usage or input error,
3 capacity limit exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import catalog as cat
from .errors import CapacityError, LedgerObataError, ReferenceUnavailableError
from .isometry import classify
from .reference import reference_rows
from .results import (
    MalformedInputError,
    atomic_write,
    dumps,
    points_csv,
    read_solve,
    solve_document,
    to_csv,
)
from .solver import Normalization, SolverOptions, normalize, run_multistart, verify_against_reference

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
SOLVE_SOFT_CAP = 6
VERIFY_TOL = 1e-7


class UsageError(LedgerObataError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: Optional[int] = None
    input: Optional[str] = None
    starts: Optional[int] = None
    seed: int = 42
    tol: Optional[float] = None
    dedup_tol: float = 1e-7
    out: Optional[str] = None
    format: str = "json"
    convention: str = Normalization.STILDE_EQUALS_N.value
    workers: int = 1
    force: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(ns).items() if k in fields})


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ledger-obata", description="Scalar curvature critical points on F^(n+1)/diag(F).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("solve", help="multistart census of critical points")
    p.add_argument("-n", type=_positive_int, required=True)
    p.add_argument("--starts", type=_positive_int, help="number of random starts (default depends on n)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=_positive_float, help="Newton residual tolerance (default 1e-12)")
    p.add_argument("--dedup-tol", type=_positive_float, default=1e-7)
    p.add_argument("--convention", choices=[c.value for c in Normalization], default=Normalization.STILDE_EQUALS_N.value)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--force", action="store_true", help=f"allow n > {SOLVE_SOFT_CAP}")
    output_flags(p)

    p = sub.add_parser("classify", help="group a solve result into isometry classes")
    p.add_argument("input")
    p.add_argument("--tol", type=_positive_float, help="canonical-form tolerance (default 1e-8)")
    output_flags(p)

    p = sub.add_parser("verify", help="match a solve result against the embedded reference")
    p.add_argument("input")
    p.add_argument("--tol", type=_positive_float, help=f"per-coordinate tolerance (default {VERIFY_TOL})")

    for name, helptext in (("catalog", "routine critical points and partitions"), ("bounds", "partition counts and bounds")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("-n", type=_positive_int, required=True)
        output_flags(p)

    p = sub.add_parser("standard", help="standard metric frames")
    p.add_argument("-n", type=_positive_int, required=True)
    output_flags(p)
    return parser


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)


def _report_stream(cfg: RunConfig):
    # keep stdout clean when it carries the document
    return sys.stdout if cfg.out else sys.stderr


def cmd_solve(cfg: RunConfig) -> int:
    n = cfg.n
    if n > SOLVE_SOFT_CAP and not cfg.force:
        raise CapacityError(f"solve is capped at n <= {SOLVE_SOFT_CAP}; pass --force to override")
    opts = SolverOptions(starts=cfg.starts, seed=cfg.seed, dedup_tol=cfg.dedup_tol, workers=cfg.workers)
    if cfg.tol is not None:
        opts = replace(opts, newton_tol=cfg.tol)
    res = run_multistart(n, opts)
    conv = Normalization(cfg.convention)
    points = res.points if conv is Normalization.STILDE_EQUALS_N else [normalize(p, conv) for p in res.points]
    config = {
        "starts": res.starts,
        "seed": cfg.seed,
        "tol": opts.newton_tol,
        "dedup_tol": opts.dedup_tol,
        "convention": conv.value,
    }
    if cfg.format == "csv":
        _emit(cfg, points_csv(n, points))
    else:
        _emit(cfg, dumps(solve_document(n, points, config)))
    out = _report_stream(cfg)
    print(f"n={n}: {len(points)} critical points from {res.starts} starts (seed {cfg.seed}, {res.converged} converged)", file=out)
    if not res.stable:
        print("warning: some roots were first reached late in the start sequence; consider more starts", file=out)
    print(f"{'idx':>4}  {'S~':>12}  {'V~':>12}  {'residual':>10}", file=out)
    for i, p in enumerate(points):
        print(f"{i:>4}  {p.s_tilde:>12.9f}  {p.volume:>12.9f}  {p.residual_norm:>10.2e}", file=out)
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    n, points = read_solve(cfg.input)
    base = [
        p if p.normalization is Normalization.STILDE_EQUALS_N else normalize(p, Normalization.STILDE_EQUALS_N)
        for p in points
    ]
    classes = classify(base) if cfg.tol is None else classify(base, tol=cfg.tol)
    if cfg.format == "csv":
        rows = ([k, c.volume, c.s_tilde, " ".join(map(str, c.members))] for k, c in enumerate(classes))
        _emit(cfg, to_csv(["class", "volume", "s_tilde", "members"], rows))
    else:
        doc = {
            "version": 1,
            "kind": "isometry-classes",
            "n": n,
            "convention": Normalization.STILDE_EQUALS_N.value,
            "count": len(classes),
            "classes": [c.to_json() for c in classes],
        }
        _emit(cfg, dumps(doc))
    out = _report_stream(cfg)
    print(f"n={n}: {len(points)} points in {len(classes)} isometry classes", file=out)
    for k, c in enumerate(classes):
        size = len(c.members)
        print(f"  class {k}: V~ = {c.volume:.9f}, {size} member{'s' if size != 1 else ''}", file=out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    n, points = read_solve(cfg.input)
    rows = reference_rows(n)
    tol = VERIFY_TOL if cfg.tol is None else cfg.tol
    report = verify_against_reference(points, [r.coords for r in rows], tol)
    print(f"n={n}: {report.summary()} (tol {tol:g})")
    if report.ok:
        return EXIT_OK
    pz = np.array([normalize(p, Normalization.STILDE_EQUALS_N).coords.as_vector() for p in points]).reshape(len(points), -1)
    rz = np.array([r.coords.as_vector() for r in rows])
    for j in report.missing:
        near = float(np.min(np.max(np.abs(pz - rz[j]), axis=1))) if len(points) else float("inf")
        print(f"  missing reference row {rows[j].index}: nearest point at distance {near:.3e}")
    for i in report.extra:
        near = float(np.min(np.max(np.abs(rz - pz[i]), axis=1)))
        print(f"  extra point {i}: nearest reference row at distance {near:.3e}")
    return EXIT_MISMATCH


def cmd_catalog(cfg: RunConfig) -> int:
    c = cat.catalog(cfg.n)
    if cfg.format == "csv":
        rows_i, cols_i = np.tril_indices(cfg.n)
        header = ["index", *(f"a{r + 1}{k + 1}" for r, k in zip(rows_i, cols_i))]
        rows = ([i, *map(float, m.matrix[rows_i, cols_i])] for i, m in enumerate(c.routine_points))
        _emit(cfg, to_csv(header, rows))
    else:
        _emit(cfg, dumps(c.to_json()))
    out = _report_stream(cfg)
    print(f"n={cfg.n}: {len(c.partitions)} partitions, {len(c.routine_points)} routine critical points", file=out)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    b = cat.bounds(cfg.n)
    doc = {**b.to_json(), "emhs_lower": cat.EMHS_LOWER}
    if cfg.format == "csv":
        _emit(cfg, to_csv(list(doc), [list(doc.values())]))
    else:
        _emit(cfg, dumps(doc))
    out = _report_stream(cfg)
    print(
        f"n={b.n}: p={b.p_n}  maroti={b.maroti_bound:.6g}  hardy-ramanujan={b.hardy_ramanujan:.6g}  "
        f"rem_sum={b.rem_sum_bound}  (1+sqrt2)^(n-1)={b.rem_sqrt2_bound:.6g}",
        file=out,
    )
    return EXIT_OK


def cmd_standard(cfg: RunConfig) -> int:
    st = cat.standard_matrix(cfg.n)
    ein = cat.standard_einstein_matrix(cfg.n)
    if cfg.format == "csv":
        idx = list(zip(*np.tril_indices(cfg.n)))
        header = ["frame", *(f"a{r + 1}{k + 1}" for r, k in idx)]
        rows = [[name, *(float(m.matrix[r, k]) for r, k in idx)] for name, m in (("standard", st), ("einstein", ein))]
        _emit(cfg, to_csv(header, rows))
    else:
        _emit(cfg, dumps({"n": cfg.n, "standard": st.tolist(), "einstein": ein.tolist()}))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
    "bounds": cmd_bounds,
    "standard": cmd_standard,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = RunConfig.from_args(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ReferenceUnavailableError, MalformedInputError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
