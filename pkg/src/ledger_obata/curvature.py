"""Normalized scalar curvature of invariant metrics and its derivatives.

For a frame ``A`` with inverse ``beta`` the normalized scalar curvature is

    S~ = 2 sum_ij a_ij^2 - sum_ijk Lambda_ijk,
    Lambda_ijk = (sum_l a_il a_jl beta_lk)^2,

and ``S = (p / 4) S~`` with ``p = dim F``.  For lower-triangular frames only
the terms with ``k < min(i, j)`` survive next to ``sum_i a_ii^2``.

Indices in this module are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateMetricError
from .metric_core import (
    RatioCoordinates,
    TriangularMetric,
    as_metric,
    lower_inverse,
    strict_lower_indices,
)

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class CurvatureReport:
    s_tilde: float
    volume: float
    einstein_constant: float
    total_scalar: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "s_tilde": self.s_tilde,
            "volume": self.volume,
            "einstein_constant": self.einstein_constant,
            "total_scalar": self.total_scalar,
        }


def _frame_inverse(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DegenerateMetricError(f"expected a square frame, got shape {a.shape}")
    if not np.isfinite(np.linalg.cond(a)) or np.linalg.cond(a) > _COND_LIMIT:
        raise DegenerateMetricError("frame is singular")
    return np.linalg.inv(a)


def bracket_terms(a: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``M_ijk = sum_l a_il a_jl beta_lk`` (batched over leading axes)."""
    return np.einsum("...il,...jl,...lk->...ijk", a, a, beta)


def _sum_lambda(m: np.ndarray) -> np.ndarray:
    # k-outer, (i, j)-inner accumulation
    per_k = np.sum(np.moveaxis(m * m, -1, -3), axis=(-2, -1))
    return np.sum(per_k, axis=-1)


def lambda_term(a, beta, i: int, j: int, k: int) -> float:
    """Single ``Lambda_ijk``; symmetric in ``(i, j)``."""
    a = np.asarray(a, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = a.shape[0]
    for idx in (i, j, k):
        if not 0 <= idx < n:
            raise IndexError(f"index {idx} out of range for n={n}")
    return float(np.sum(a[i] * a[j] * beta[:, k]) ** 2)


def stilde_general_batch(a: np.ndarray, beta: np.ndarray) -> np.ndarray:
    m = bracket_terms(a, beta)
    return 2.0 * np.sum(a * a, axis=(-2, -1)) - _sum_lambda(m)


def scalar_curvature_general(a) -> float:
    """Normalized scalar curvature of an arbitrary non-singular frame."""
    a = np.asarray(a, dtype=float)
    return float(stilde_general_batch(a, _frame_inverse(a)))


def scalar_curvature_triangular(a: TriangularMetric) -> float:
    """Normalized scalar curvature using the lower-triangular simplification."""
    a = as_metric(a).matrix
    n = a.shape[0]
    m = bracket_terms(a, lower_inverse(a))
    idx = np.arange(n)
    mask = idx[None, None, :] < np.minimum(idx[:, None], idx[None, :])[:, :, None]
    return float(np.sum(np.diag(a) ** 2) - _sum_lambda(np.where(mask, m, 0.0)))


def gradient_matrix_batch(a: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``dS~/da`` for every entry of (a stack of) frames.

    Uses ``d beta = -beta (dA) beta``.  Generic in dtype.
    """
    m = bracket_terms(a, beta)
    r = np.einsum("...ijk,...jl,...lk->...il", m, a, beta)
    p = np.einsum("...ijk,...il,...jl->...lk", m, a, a)
    bt = np.swapaxes(beta, -1, -2)
    return 4.0 * a - 2.0 * (2.0 * r - bt @ p @ bt)


def gradient_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return gradient_matrix_batch(a, _frame_inverse(a))


def ratio_frames(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Stack of triangular frames built from ratio coordinates ``(B, n)``, ``(B, m)``."""
    bsz, n = x.shape
    dtype = np.result_type(x, u)
    a = np.zeros((bsz, n, n), dtype=dtype)
    if dtype == object:
        a[...] = x.flat[0] * 0
    rows, cols = strict_lower_indices(n)
    a[:, np.arange(n), np.arange(n)] = x
    a[:, rows, cols] = u * x[:, cols]
    return a


def ratio_gradient_batch(x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of S~ with respect to ``x`` and ``u``.

    ``x`` has shape ``(B, n)`` and ``u`` shape ``(B, n(n-1)/2)``; any dtype
    with field arithmetic works (float, complex for complex-step
    differentiation, object arrays of mpmath numbers).
    """
    n = x.shape[1]
    a = ratio_frames(x, u)
    g = gradient_matrix_batch(a, lower_inverse(a))
    rows, cols = strict_lower_indices(n)
    diag = np.arange(n)
    g_low = g[:, rows, cols]
    g_x = g[:, diag, diag].copy()
    # d alpha_ij / d x_j = u_ij for j < i
    for t in range(rows.shape[0]):
        g_x[:, cols[t]] = g_x[:, cols[t]] + g_low[:, t] * u[:, t]
    g_u = g_low * x[:, cols]
    return g_x, g_u


def gradient_ratio(c: RatioCoordinates) -> tuple[np.ndarray, np.ndarray]:
    g_x, g_u = ratio_gradient_batch(c.x[None, :], c.u[None, :])
    return g_x[0], g_u[0]


def einstein_constant(s_tilde: float, n: int) -> float:
    """Einstein constant ``lambda = S~ / (4n)`` of an Einstein metric on ``F^n``."""
    if n < 1:
        raise ValueError("n must be positive")
    return s_tilde / (4.0 * n)


def curvature_report(a: TriangularMetric, p: Optional[int] = None) -> CurvatureReport:
    a = as_metric(a)
    s = scalar_curvature_triangular(a)
    return CurvatureReport(
        s_tilde=s,
        volume=float(np.prod(np.diag(a.matrix))),
        einstein_constant=einstein_constant(s, a.n),
        total_scalar=None if p is None else p * s / 4.0,
    )
