"""Deterministic JSON/CSV persistence for solver, classifier and catalog runs.

Floats are written with ``repr``: the shortest string that parses back to
the same double, so files round-trip exactly and identical runs give
identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .errors import LedgerObataError
from .solver import CriticalPoint, Normalization

SCHEMA_VERSION = 1


class MalformedInputError(LedgerObataError, ValueError):
    """An input file is not a solve result this package can read."""


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` via a temporary file in the same directory and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solve_document(n: int, points: Sequence[CriticalPoint], config: dict) -> dict:
    conv = points[0].normalization.value if points else config.get("convention", Normalization.STILDE_EQUALS_N.value)
    return {
        "version": SCHEMA_VERSION,
        "kind": "critical-points",
        "n": n,
        "convention": conv,
        "config": config,
        "count": len(points),
        "points": [p.to_json() for p in points],
    }


def read_solve(path: str | os.PathLike) -> tuple[int, list[CriticalPoint]]:
    """Load a solve result written by :func:`solve_document`."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != "critical-points":
        raise MalformedInputError(f"{path} is not a critical-point file")
    try:
        n = int(doc["n"])
        conv = Normalization(doc.get("convention", Normalization.STILDE_EQUALS_N.value))
        points = [CriticalPoint.from_json(p, conv) for p in doc["points"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc
    if any(p.n != n for p in points):
        raise MalformedInputError(f"{path}: point dimension differs from n={n}")
    return n, points


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def points_csv(n: int, points: Sequence[CriticalPoint]) -> str:
    m = n * (n - 1) // 2
    header = ["index", *(f"x{i + 1}" for i in range(n)), *(f"u{k + 1}" for k in range(m)), "s_tilde", "volume", "residual_norm"]
    rows = (
        [i, *map(float, p.coords.x), *map(float, p.coords.u), p.s_tilde, p.volume, p.residual_norm]
        for i, p in enumerate(points)
    )
    return to_csv(header, rows)
