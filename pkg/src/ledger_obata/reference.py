"""Embedded reference critical points for ``n = 2`` and ``n = 3``.

Rows are normalized to ``S~ = n`` and carry their closed forms as opaque
labels.  The asset is produced by ``scripts/generate_reference.py``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import ReferenceUnavailableError
from .metric_core import RatioCoordinates


@dataclass(frozen=True)
class ReferenceRow:
    index: int
    coords: RatioCoordinates
    volume: float
    exact: dict


@lru_cache(maxsize=None)
def _load() -> dict:
    text = resources.files(__package__).joinpath("data/reference.json").read_text()
    return json.loads(text)


def reference_version() -> int:
    return int(_load()["version"])


def available_dimensions() -> tuple[int, ...]:
    return tuple(sorted(int(k) for k in _load()["sets"]))


def reference_rows(n: int) -> list[ReferenceRow]:
    sets = _load()["sets"]
    if str(n) not in sets:
        raise ReferenceUnavailableError(f"no reference critical points for n={n}")
    return [
        ReferenceRow(
            index=row["index"],
            coords=RatioCoordinates(row["x"], row["u"]),
            volume=row["volume"],
            exact=dict(row["exact"]),
        )
        for row in sets[str(n)]["rows"]
    ]


def reference_coords(n: int) -> list[RatioCoordinates]:
    return [r.coords for r in reference_rows(n)]
