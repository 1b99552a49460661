"""Standard and routine Einstein metrics, partitions and counting bounds.

``standard_einstein_matrix(k)`` has Einstein constant 1.  Block-diagonal
products of such blocks, one per part of a composition of ``n``, give the
routine metrics; replacing paired super-blocks by their :func:`hat` images
gives further critical points of the same kind.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .isometry import hat
from .metric_core import TriangularMetric, block_diag, scale

DEFAULT_BUDGET = 8
MAX_PARTITION_N = 1000
EMHS_LOWER = math.sqrt(2.0) * math.pi / 3.0
_U128_LIMIT = 1 << 127


def standard_matrix(n: int) -> TriangularMetric:
    """Frame of the standard metric with ``det = sqrt(n + 1)``."""
    if n < 1:
        raise DomainError("n must be positive")
    a = np.zeros((n, n))
    for i in range(1, n + 1):
        d = n - i + 1
        a[i - 1, i - 1] = math.sqrt((d + 1) / d)
        a[i - 1, : i - 1] = 1.0 / math.sqrt(d * (d + 1))
    return TriangularMetric(a)


def standard_einstein_matrix(n: int) -> TriangularMetric:
    """:func:`standard_matrix` rescaled to Einstein constant 1."""
    return scale(standard_matrix(n), math.sqrt(4.0 * (n + 1) / (n + 3)))


def routine_from_partition(parts: Sequence[int]) -> TriangularMetric:
    parts = [int(k) for k in parts]
    if not parts or any(k < 1 for k in parts):
        raise DomainError(f"parts must be a nonempty list of positive integers, got {parts}")
    return block_diag(*(standard_einstein_matrix(k) for k in parts))


def enumerate_compositions(n: int) -> list[tuple[int, ...]]:
    """All ``2^(n-1)`` ordered decompositions of ``n``, lexicographically."""
    if n < 1:
        raise DomainError("n must be positive")

    def rec(m: int) -> Iterator[tuple[int, ...]]:
        if m == 0:
            yield ()
            return
        for first in range(1, m + 1):
            for rest in rec(m - first):
                yield (first, *rest)

    return list(rec(n))


def enumerate_partitions(n: int) -> list[tuple[int, ...]]:
    """Non-increasing part lists of ``n``, largest first part first."""
    if n < 1:
        raise DomainError("n must be positive")

    def rec(m: int, cap: int) -> Iterator[tuple[int, ...]]:
        if m == 0:
            yield ()
            return
        for first in range(min(m, cap), 0, -1):
            for rest in rec(m - first, first):
                yield (first, *rest)

    return list(rec(n, n))


def super_blocks(parts: Sequence[int]) -> list[tuple[int, ...]]:
    """Consecutive pairs of parts; an odd leftover joins the last pair.

    A single part gives no super-block.
    """
    parts = tuple(parts)
    m = len(parts) // 2
    groups = [parts[2 * i : 2 * i + 2] for i in range(m)]
    if len(parts) % 2 and groups:
        groups[-1] = groups[-1] + parts[-1:]
    return groups


def hat_variants(parts: Sequence[int]) -> list[TriangularMetric]:
    """All ``2^m`` choices of a super-block or its hat image."""
    groups = super_blocks(parts)
    if not groups:
        return [routine_from_partition(parts)]
    options = []
    for g in groups:
        blk = routine_from_partition(g)
        options.append((blk, hat(blk)))
    return [block_diag(*choice) for choice in product(*options)]


def routine_critical_points(n: int, budget: int = DEFAULT_BUDGET) -> list[TriangularMetric]:
    """Routine Einstein frames (Einstein constant 1) with hat variants.

    Exact duplicates (entrywise within 1e-10) are dropped, first occurrence
    kept, in composition order.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if n > budget:
        raise CapacityError(f"routine enumeration for n={n} exceeds the budget n <= {budget}")
    out: list[TriangularMetric] = []
    seen = np.empty((0, n, n))
    for comp in enumerate_compositions(n):
        for m in hat_variants(comp):
            if seen.shape[0] and np.min(np.max(np.abs(seen - m.matrix), axis=(1, 2))) <= 1e-10:
                continue
            out.append(m)
            seen = np.concatenate([seen, m.matrix[None]])
    return out


def partition_metrics(n: int) -> list[TriangularMetric]:
    return [routine_from_partition(p) for p in enumerate_partitions(n)]


_P_TABLE = [1]
_P_LOCK = threading.Lock()


def _extend_partition_table(n: int) -> None:
    with _P_LOCK:
        p = _P_TABLE
        for m in range(len(p), n + 1):
            total = 0
            k = 1
            while True:
                g1 = k * (3 * k - 1) // 2
                if g1 > m:
                    break
                sign = 1 if k % 2 else -1
                total += sign * p[m - g1]
                g2 = k * (3 * k + 1) // 2
                if g2 <= m:
                    total += sign * p[m - g2]
                k += 1
            if not 0 <= total < _U128_LIMIT:
                raise CapacityError(f"p({m}) does not fit the 128-bit accumulator")
            p.append(total)


def partition_count(n: int) -> int:
    """Number of partitions ``p(n)`` via the pentagonal-number recurrence."""
    if not 1 <= n <= MAX_PARTITION_N:
        raise CapacityError(f"partition_count supports 1 <= n <= {MAX_PARTITION_N}, got {n}")
    if n >= len(_P_TABLE):
        _extend_partition_table(n)
    return _P_TABLE[n]


def maroti_bound(n: int) -> float:
    return math.exp(2.5 * math.sqrt(n)) / (13.0 * n)


def hardy_ramanujan(n: int) -> float:
    return math.exp(math.pi * math.sqrt(2.0 * n / 3.0)) / (4.0 * n * math.sqrt(3.0))


def rem_sum_bound(n: int) -> int:
    """``sum_{l=1..n} C(n-1, l-1) 2^floor(l/2)`` over composition lengths."""
    if n < 1:
        raise DomainError("n must be positive")
    return sum(math.comb(n - 1, l - 1) << (l // 2) for l in range(1, n + 1))


def rem_sqrt2_bound(n: int) -> float:
    """``(1 + sqrt 2)^(n-1)``; ``inf`` once it leaves the double range."""
    try:
        return (1.0 + math.sqrt(2.0)) ** (n - 1)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class PartitionSummary:
    n: int
    p_n: int
    maroti_bound: float
    hardy_ramanujan: float
    rem_sum_bound: int
    rem_sqrt2_bound: float

    def to_json(self) -> dict:
        """Plain dict; non-finite floats become ``None``."""

        def real(v: float):
            return v if math.isfinite(v) else None

        return {
            "n": self.n,
            "p_n": self.p_n,
            "maroti_bound": real(self.maroti_bound),
            "hardy_ramanujan": real(self.hardy_ramanujan),
            "rem_sum_bound": self.rem_sum_bound,
            "rem_sqrt2_bound": real(self.rem_sqrt2_bound),
        }


def bounds(n: int) -> PartitionSummary:
    p = partition_count(n)
    # log comparison keeps large n away from float overflow
    if not math.log(p) > 2.5 * math.sqrt(n) - math.log(13.0 * n):
        raise ArithmeticError(f"p({n}) fails the lower bound exp(2.5 sqrt n)/(13 n)")
    return PartitionSummary(
        n=n,
        p_n=p,
        maroti_bound=maroti_bound(n),
        hardy_ramanujan=hardy_ramanujan(n),
        rem_sum_bound=rem_sum_bound(n),
        rem_sqrt2_bound=rem_sqrt2_bound(n),
    )


@dataclass(frozen=True)
class Catalog:
    n: int
    partitions: list[tuple[int, ...]]
    routine_points: list[TriangularMetric]
    counts: PartitionSummary

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "partitions": [list(p) for p in self.partitions],
            "routine_points": [m.tolist() for m in self.routine_points],
            "counts": self.counts.to_json(),
        }


def catalog(n: int, budget: int = DEFAULT_BUDGET) -> Catalog:
    return Catalog(
        n=n,
        partitions=enumerate_partitions(n),
        routine_points=routine_critical_points(n, budget),
        counts=bounds(n),
    )
