"""Isometries between matrix representatives and isometry classes.

Three moves produce isometric metrics from a frame ``A``:

* left multiplication by an orthogonal matrix (same metric),
* interchanging columns (swapping two factors of ``F^n``),
* right multiplication by ``T^k``, which moves the base factor of
  ``F^{n+1}`` to position ``k``.

Left moves are quotiented out by :func:`cholesky_canonical`; the other two
generate a finite group of signed integer matrices acting on the right.

A block-diagonal frame describes a product metric, and a move applied to one
factor is an isometry of the product.  :func:`extended_orbit` closes the
right-multiplier orbit under these factor-wise moves; classification uses it.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .metric_core import TriangularMetric, as_metric, canonicalize_many, cholesky_canonical

MAX_GROUP_N = 8
CANONICAL_TOL = 1e-8
MAX_EXTENDED_ORBIT = 50_000


class MoveKind(Enum):
    COLUMN_PERMUTATION = "column-permutation"
    BASE_POINT_SWAP = "base-point-swap"
    LEFT_ORTHOGONAL = "left-orthogonal"


@dataclass(frozen=True)
class IsometryMove:
    """A generator of the move group.

    ``perm`` is used by column permutations (``perm[j]`` is the source column
    of column ``j``); ``k`` (1-based) by base-point swaps.  Left orthogonal
    moves carry no data because canonicalization removes them.
    """

    kind: MoveKind
    perm: tuple[int, ...] = ()
    k: int = 0

    def matrix(self, n: int) -> np.ndarray:
        if self.kind is MoveKind.COLUMN_PERMUTATION:
            return permutation_matrix(self.perm)
        if self.kind is MoveKind.BASE_POINT_SWAP:
            return t_matrix(n, self.k)
        raise DomainError("left orthogonal moves have no right-multiplier matrix")


def t_matrix(n: int, k: int) -> np.ndarray:
    """``T^k``: identity except row ``k`` (1-based), which is all ``-1``."""
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in 1..{n}, got {k}")
    t = np.eye(n, dtype=np.int64)
    t[k - 1, :] = -1
    return t


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Right multiplier sending column ``perm[j]`` of ``A`` to column ``j``."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise DomainError(f"not a permutation of 0..{n - 1}: {perm}")
    p = np.zeros((n, n), dtype=np.int64)
    p[list(perm), np.arange(n)] = 1
    return p


def generators(n: int) -> list[np.ndarray]:
    gens = []
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        gens.append(permutation_matrix(perm))
    gens.extend(t_matrix(n, k) for k in range(1, n + 1))
    return gens


@lru_cache(maxsize=None)
def _group(n: int) -> np.ndarray:
    ident = np.eye(n, dtype=np.int64)
    gens = generators(n)
    seen = {ident.tobytes(): ident}
    frontier = [ident]
    while frontier:
        stack = np.stack(frontier)
        frontier = []
        for g in gens:
            for m in stack @ g:
                key = m.tobytes()
                if key not in seen:
                    seen[key] = m
                    frontier.append(m)
    elems = sorted(seen.values(), key=lambda m: tuple(-m.ravel()))
    out = np.stack(elems)
    out.setflags(write=False)
    return out


def orbit_group(n: int) -> np.ndarray:
    """All right multipliers generated by column swaps and ``T^1..T^n``.

    Built by brute-force closure and cached per ``n``; returned as a
    read-only stack ``(order, n, n)`` with the identity first.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if n > MAX_GROUP_N:
        raise CapacityError(f"move group enumeration is limited to n <= {MAX_GROUP_N}")
    return _group(n)


def apply_move(a: TriangularMetric, g: np.ndarray) -> TriangularMetric:
    return cholesky_canonical(as_metric(a).matrix @ np.asarray(g, dtype=float))


def orbit(a: TriangularMetric) -> np.ndarray:
    """Canonical representatives of ``A g`` for every group element ``g``."""
    a = as_metric(a).matrix
    return canonicalize_many(a[None, :, :] @ orbit_group(a.shape[0]).astype(float))


def _lex_min(cands: np.ndarray, tol: float) -> np.ndarray:
    # entries within tol of the running minimum count as ties
    flat = cands.reshape(cands.shape[0], -1)
    alive = np.arange(flat.shape[0])
    for col in range(flat.shape[1]):
        vals = flat[alive, col]
        alive = alive[vals <= vals.min() + tol]
        if alive.size == 1:
            break
    return cands[alive[0]]


def canonical_form(a: TriangularMetric, tol: float = CANONICAL_TOL) -> TriangularMetric:
    """Tolerance-aware lexicographic minimum of the orbit of ``A``."""
    return TriangularMetric(_lex_min(orbit(a), tol))


def block_splits(a: TriangularMetric, tol: float = 1e-10) -> list[int]:
    """Sizes ``k`` of leading blocks for which ``A = diag(A[:k, :k], A[k:, k:])``."""
    m = as_metric(a).matrix
    cut = tol * max(1.0, float(np.max(np.abs(m))))
    return [k for k in range(1, m.shape[0]) if np.max(np.abs(m[k:, :k])) <= cut]


def _neighbours(m: np.ndarray) -> list[np.ndarray]:
    n = m.shape[0]
    out = list(canonicalize_many(m[None] @ np.stack(generators(n)).astype(float)))
    for k in block_splits(m):
        for lo, hi in ((0, k), (k, n)):
            size = hi - lo
            gens = np.stack(generators(size)).astype(float) if size > 1 else np.array([[[-1.0]]])
            blocks = canonicalize_many(m[None, lo:hi, lo:hi] @ gens)
            for b in blocks:
                c = m.copy()
                c[lo:hi, lo:hi] = b
                out.append(c)
    return out


def extended_orbit(a: TriangularMetric, tol: float = 1e-9) -> np.ndarray:
    """Closure of ``{A}`` under group moves and factor-wise moves on products.

    Points closer than ``tol`` (max-abs) are identified.
    """
    start = as_metric(a).matrix
    found = [start.copy()]
    stack = np.array(found)
    frontier = [start]
    while frontier:
        fresh = []
        for m in frontier:
            for c in _neighbours(m):
                if np.min(np.max(np.abs(stack - c[None]), axis=(1, 2))) > tol:
                    found.append(c)
                    stack = np.concatenate([stack, c[None]])
                    fresh.append(c)
        if len(found) > MAX_EXTENDED_ORBIT:
            raise CapacityError(f"extended orbit exceeds {MAX_EXTENDED_ORBIT} elements")
        frontier = fresh
    return stack


def class_representative(a: TriangularMetric, tol: float = CANONICAL_TOL) -> TriangularMetric:
    """Lexicographic minimum of :func:`extended_orbit`; constant on classes."""
    return TriangularMetric(_lex_min(extended_orbit(a), tol))


@dataclass(frozen=True, eq=False)
class IsometryClass:
    canonical: TriangularMetric
    members: tuple[int, ...]
    s_tilde: float
    volume: float

    def to_json(self) -> dict:
        return {
            "volume": self.volume,
            "s_tilde": self.s_tilde,
            "canonical_matrix": self.canonical.tolist(),
            "member_indices": list(self.members),
        }


def classify(points, tol: float = CANONICAL_TOL, invariant_tol: float = 1e-9) -> list[IsometryClass]:
    """Group critical points whose canonical forms agree within ``tol``.

    ``points`` are objects with ``matrix``, ``s_tilde`` and ``volume``
    attributes sharing one normalization.  ``S~`` and volume are compared
    first as cheap isometry invariants.  Canonical forms come from
    :func:`class_representative`, so factor-wise moves on products count.
    """
    groups: list[list] = []  # [canonical array, s, vol, members]
    for idx, p in enumerate(points):
        canon = class_representative(p.matrix, tol).matrix
        for grp in groups:
            if (
                abs(grp[1] - p.s_tilde) <= invariant_tol * max(1.0, abs(p.s_tilde))
                and abs(grp[2] - p.volume) <= invariant_tol * max(1.0, abs(p.volume))
                and np.max(np.abs(grp[0] - canon)) <= tol
            ):
                grp[3].append(idx)
                break
        else:
            groups.append([canon, p.s_tilde, p.volume, [idx]])
    classes = [IsometryClass(TriangularMetric(c), tuple(m), s, v) for c, s, v, m in groups]
    classes.sort(key=lambda c: (c.volume, tuple(c.canonical.matrix.ravel())))
    return classes


def hat(a: TriangularMetric) -> TriangularMetric:
    """``diag(1, ..., 1, -1) A T^n`` reduced to triangular form; an involution."""
    a = as_metric(a)
    n = a.n
    flip = np.eye(n)
    flip[-1, -1] = -1.0
    return cholesky_canonical(flip @ a.matrix @ t_matrix(n, n))


def hat_formula(a: TriangularMetric) -> np.ndarray:
    """Entrywise form of :func:`hat`: the last row becomes ``a_nn - a_nj``."""
    b = np.array(as_metric(a).matrix, copy=True)
    b[-1, :-1] = b[-1, -1] - b[-1, :-1]
    return b


def is_hat_fixed(a: TriangularMetric, tol: float = 1e-12) -> bool:
    m = as_metric(a).matrix
    return bool(np.all(np.abs(2.0 * m[-1, :-1] - m[-1, -1]) <= tol))


def same_class(a: TriangularMetric, b: TriangularMetric, tol: float = CANONICAL_TOL) -> bool:
    return canonical_form(a, tol).allclose(canonical_form(b, tol), atol=tol)


def find_move(a: TriangularMetric, b: TriangularMetric, tol: float = CANONICAL_TOL) -> Optional[np.ndarray]:
    """A group element ``g`` with ``canon(A g) = B``, if any."""
    b = as_metric(b).matrix
    cands = orbit(a)
    hits = np.flatnonzero(np.max(np.abs(cands - b[None]), axis=(1, 2)) <= tol)
    return None if hits.size == 0 else np.array(orbit_group(b.shape[0])[hits[0]])
