"""Lower-triangular parameterization of invariant metrics on ``F^n``.

An ``ad(h)``-invariant inner product on ``n f`` is fixed by a non-degenerate
``n x n`` frame matrix whose rows are orthonormal.  Frames related by a left
orthogonal factor define the same metric, so each metric has exactly one
lower-triangular representative with positive diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateMetricError, DomainError

PIVOT_TOL = 1e-10

# A general (not necessarily triangular) frame; any array-like of shape (r, c).
GeneralFrame = np.ndarray


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangularMetric:
    """Lower-triangular frame with positive diagonal.

    The wrapped ``matrix`` is a read-only float array.  Instances are
    immutable and safe to share between threads.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DomainError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix entries must be finite")
        if np.any(np.triu(a, 1) != 0.0):
            raise DomainError("matrix must be lower triangular")
        if np.any(np.diag(a) <= 0.0):
            raise DomainError("diagonal entries must be positive")
        object.__setattr__(self, "matrix", _readonly(a))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        a = self.matrix if dtype is None else self.matrix.astype(dtype)
        return np.array(a, copy=True) if copy else a

    def __repr__(self) -> str:
        return f"TriangularMetric({self.matrix.tolist()!r})"

    def tolist(self) -> list[list[float]]:
        return self.matrix.tolist()

    def allclose(self, other: "TriangularMetric | np.ndarray", atol: float = 1e-10) -> bool:
        b = np.asarray(other, dtype=float)
        return b.shape == self.matrix.shape and bool(np.allclose(self.matrix, b, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class RatioCoordinates:
    """Solver coordinates: diagonal ``x`` and off-diagonal ratios ``u``.

    ``alpha_ii = x_i`` and ``alpha_ij = u_ij * x_j`` for ``j < i``.  The ratios
    are stored in row-major order ``u21, u31, u32, u41, ...``.
    """

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        u = np.atleast_1d(np.asarray(self.u, dtype=float)) if np.size(self.u) else np.zeros(0)
        n = x.shape[0]
        if x.ndim != 1 or n == 0:
            raise DomainError("x must be a non-empty vector")
        if u.shape != (n * (n - 1) // 2,):
            raise DomainError(f"expected {n * (n - 1) // 2} ratios for n={n}, got {u.shape}")
        if np.any(x <= 0.0) or not np.all(np.isfinite(x)) or not np.all(np.isfinite(u)):
            raise DomainError("diagonal entries x_i must be positive and finite")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "u", _readonly(u))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    @classmethod
    def from_vector(cls, z: Sequence[float], n: int) -> "RatioCoordinates":
        z = np.asarray(z, dtype=float)
        return cls(z[:n], z[n:])

    def __repr__(self) -> str:
        return f"RatioCoordinates(x={self.x.tolist()!r}, u={self.u.tolist()!r})"


def as_metric(a) -> TriangularMetric:
    return a if isinstance(a, TriangularMetric) else TriangularMetric(np.asarray(a, dtype=float))


def strict_lower_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major indices ``(i, j)``, ``j < i``, matching the ratio ordering."""
    return np.tril_indices(n, -1)


def from_ratio_coords(c: RatioCoordinates) -> TriangularMetric:
    n = c.n
    a = np.diag(c.x)
    rows, cols = strict_lower_indices(n)
    a[rows, cols] = c.u * c.x[cols]
    return TriangularMetric(a)


def to_ratio_coords(a: TriangularMetric) -> RatioCoordinates:
    a = as_metric(a).matrix
    rows, cols = strict_lower_indices(a.shape[0])
    x = np.diag(a).copy()
    return RatioCoordinates(x, a[rows, cols] / x[cols])


def volume(a: TriangularMetric) -> float:
    """Determinant ``prod(alpha_ii)`` of the frame."""
    return float(np.prod(np.diag(as_metric(a).matrix)))


def lower_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of (a stack of) lower-triangular matrices by forward substitution.

    Works for any dtype supporting ``+ - * /`` elementwise, which lets the
    curvature code run in float, complex and mpmath object arithmetic alike.
    """
    a = np.asarray(a)
    n = a.shape[-1]
    b = np.zeros_like(a)
    one = a[..., 0, 0] * 0 + 1
    for i in range(n):
        b[..., i, i] = one / a[..., i, i]
        for j in range(i - 1, -1, -1):
            acc = a[..., i, j] * b[..., j, j]
            for k in range(j + 1, i):
                acc = acc + a[..., i, k] * b[..., k, j]
            b[..., i, j] = -acc / a[..., i, i]
    return b


def inverse(a: TriangularMetric) -> np.ndarray:
    """Lower-triangular inverse ``beta`` of a metric frame."""
    return lower_inverse(as_metric(a).matrix)


def _canonicalize_stack(m: np.ndarray, pivot_tol: float) -> np.ndarray:
    # M = Q L with L lower: reverse rows/cols (J M J = Q' R), then L = J R J.
    flipped = m[..., ::-1, ::-1]
    r = np.linalg.qr(flipped, mode="r")
    low = r[..., ::-1, ::-1]
    diag = np.diagonal(low, axis1=-2, axis2=-1)
    scale = np.max(np.abs(m), axis=(-2, -1))
    if np.any(np.abs(diag) <= pivot_tol * np.maximum(scale, 1e-300)[..., None]):
        raise DegenerateMetricError("frame is singular or nearly singular")
    signs = np.where(diag < 0.0, -1.0, 1.0)
    low = low * signs[..., :, None]
    return np.tril(low)


def cholesky_canonical(m: GeneralFrame, pivot_tol: float = PIVOT_TOL) -> TriangularMetric:
    """Unique lower-triangular, positive-diagonal ``L`` with ``L = Q M``.

    Equivalently ``L^T L = M^T M``: the metric is unchanged under left
    orthogonal factors, so ``L`` represents the class of ``M``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square frame, got shape {m.shape}")
    if np.all(np.triu(m, 1) == 0.0) and np.all(np.diag(m) > 0.0):
        return TriangularMetric(m)
    return TriangularMetric(_canonicalize_stack(m, pivot_tol))


def canonicalize_many(ms: np.ndarray, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Vectorized :func:`cholesky_canonical` over a stack ``(k, n, n)``."""
    return _canonicalize_stack(np.asarray(ms, dtype=float), pivot_tol)


def block_diag(*blocks: TriangularMetric) -> TriangularMetric:
    if not blocks:
        raise DomainError("block_diag needs at least one block")
    return TriangularMetric(scipy.linalg.block_diag(*(as_metric(b).matrix for b in blocks)))


def scale(a: TriangularMetric, c: float) -> TriangularMetric:
    if not c > 0.0:
        raise DomainError(f"scale factor must be positive, got {c}")
    return TriangularMetric(as_metric(a).matrix * c)


def matrix_from_json(rows: Iterable[Iterable[float]]) -> TriangularMetric:
    return TriangularMetric(np.array([[float(v) for v in row] for row in rows]))
