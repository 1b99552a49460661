"""Critical points of S~ at fixed volume via multistart damped Newton.

The Lagrange conditions are homogenized: since S~ is quadratic in the
diagonal entries ``x``, ``sum_i x_i dS~/dx_i = 2 S~``, and the volume
constraint can be traded for a fixed multiplier.  With multiplier 2 the
system reads

    x_i dS~/dx_i = 2   (i = 1..n),     dS~/du_ij = 0   (j < i),

whose solutions satisfy ``S~ = n``.  Any root rescaled by a positive
constant gives the unit-volume critical point it represents.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .curvature import ratio_gradient_batch, scalar_curvature_triangular
from .errors import DomainError
from .metric_core import RatioCoordinates, TriangularMetric, from_ratio_coords

log = logging.getLogger(__name__)

_COMPLEX_STEP = 1e-30


class Normalization(str, Enum):
    STILDE_EQUALS_N = "stilde-n"
    EINSTEIN_CONSTANT_ONE = "einstein-1"
    UNIT_VOLUME = "unit-volume"


def default_starts(n: int) -> int:
    return {1: 100, 2: 2000}.get(n, 10000)


@dataclass(frozen=True)
class SolverOptions:
    """Multistart Newton configuration.

    ``starts=None`` picks :func:`default_starts`.  Start diagonals are
    log-uniform in ``exp(x_log_range)`` and ratios uniform in ``u_range``.
    Starts are drawn row by row from one seeded stream, so the first ``k``
    starts of a longer run coincide with a run of ``k`` starts.

    Roots whose Jacobian is nearly rank deficient (smallest to largest
    singular value below ``refine_cond``) converge only linearly; they are
    grouped within ``refine_cluster_tol`` and refined with residuals
    evaluated at ``refine_dps`` decimal digits.
    """

    starts: Optional[int] = None
    seed: int = 42
    newton_max_iter: int = 200
    newton_tol: float = 1e-12
    dedup_tol: float = 1e-7
    diag_floor: float = 1e-6
    x_log_range: tuple[float, float] = (-1.0, 1.0)
    u_range: tuple[float, float] = (-2.5, 2.5)
    max_halvings: int = 30
    refine: bool = True
    refine_cond: float = 1e-4
    refine_cluster_tol: float = 1e-4
    refine_dps: int = 40
    refine_max_iter: int = 120
    chunk_size: int = 2048
    workers: int = 1

    def n_starts(self, n: int) -> int:
        return default_starts(n) if self.starts is None else int(self.starts)


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    coords: RatioCoordinates
    matrix: TriangularMetric
    s_tilde: float
    volume: float
    residual_norm: float
    normalization: Normalization

    @property
    def n(self) -> int:
        return self.coords.n

    def to_json(self) -> dict:
        return {
            "x": self.coords.x.tolist(),
            "u": self.coords.u.tolist(),
            "matrix": self.matrix.tolist(),
            "s_tilde": self.s_tilde,
            "volume": self.volume,
            "residual_norm": self.residual_norm,
        }

    @classmethod
    def from_json(cls, d: dict, normalization: Normalization | str) -> "CriticalPoint":
        coords = RatioCoordinates(d["x"], d.get("u", []))
        return critical_point(coords, Normalization(normalization))


@dataclass
class MultistartResult:
    n: int
    points: list[CriticalPoint]
    starts: int
    converged: int
    first_hit: list[int] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        """True when no root was first found in the second half of the starts."""
        return all(h < self.starts / 2 for h in self.first_hit)


# -- residual system ---------------------------------------------------------


def residual_batch(z: np.ndarray, n: int, lam=2.0) -> np.ndarray:
    """Residuals for a stack of coordinate vectors ``z = (x, u)``; any dtype."""
    x, u = z[:, :n], z[:, n:]
    g_x, g_u = ratio_gradient_batch(x, u)
    return np.concatenate([x * g_x - lam, g_u], axis=1)


def jacobian_batch(z: np.ndarray, n: int, lam: float = 2.0) -> np.ndarray:
    """Jacobian ``d residual / d z`` by complex-step differentiation.

    The residual is a rational function of ``z`` evaluated without
    conjugation or absolute values, so the imaginary part of a
    ``1e-30 i`` perturbation gives each column to rounding accuracy.
    """
    bsz, d = z.shape
    zc = np.repeat(z[:, None, :], d, axis=1).astype(complex)
    zc[:, np.arange(d), np.arange(d)] += 1j * _COMPLEX_STEP
    r = residual_batch(zc.reshape(bsz * d, d), n, lam).reshape(bsz, d, d)
    return np.swapaxes(r.imag / _COMPLEX_STEP, 1, 2)


def residual(c: RatioCoordinates, lam: float = 2.0) -> np.ndarray:
    """``(x_i dS~/dx_i - lam)_i`` followed by ``dS~/du_ij`` in row-major order."""
    return residual_batch(c.as_vector()[None, :], c.n, lam)[0]


def _lagrange_multiplier(s_tilde: float, n: int) -> float:
    return 2.0 * s_tilde / n


def critical_point(coords: RatioCoordinates, normalization: Normalization) -> CriticalPoint:
    coords = RatioCoordinates(coords.x + 0.0, coords.u + 0.0)  # no negative zeros in output
    matrix = from_ratio_coords(coords)
    s = scalar_curvature_triangular(matrix)
    r = residual(coords, _lagrange_multiplier(s, coords.n))
    return CriticalPoint(
        coords=coords,
        matrix=matrix,
        s_tilde=s,
        volume=float(np.prod(coords.x)),
        residual_norm=float(np.max(np.abs(r))),
        normalization=normalization,
    )


# -- Newton ------------------------------------------------------------------


def _solve_steps(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(jac, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(rhs)
        for i in range(rhs.shape[0]):
            out[i] = np.linalg.lstsq(jac[i], rhs[i], rcond=None)[0]
        return out


def _newton_batch(z0: np.ndarray, n: int, opts: SolverOptions):
    """Damped Newton on every row of ``z0``.

    Returns final iterates, a convergence mask and max-norm residuals.
    A step is accepted only if it strictly lowers the Euclidean residual
    norm and keeps every diagonal entry above ``diag_floor``; otherwise it
    is halved, up to ``max_halvings`` times, after which the start fails.
    """
    z = np.array(z0, dtype=float, copy=True)
    bsz = z.shape[0]
    alive = np.all(z[:, :n] >= opts.diag_floor, axis=1) & np.all(np.isfinite(z), axis=1)
    r = np.full(z.shape, np.inf)
    if alive.any():
        r[alive] = residual_batch(z[alive], n)
    converged = np.zeros(bsz, dtype=bool)
    for _ in range(opts.newton_max_iter + 1):
        with np.errstate(invalid="ignore"):
            converged |= alive & (np.max(np.abs(r), axis=1) <= opts.newton_tol)
        alive &= ~converged
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        steps = _solve_steps(jacobian_batch(z[idx], n), -r[idx])
        base_norm = np.linalg.norm(r[idx], axis=1)
        accepted = np.zeros(idx.size, dtype=bool)
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            pending = np.flatnonzero(~accepted)
            if pending.size == 0:
                break
            trial = z[idx[pending]] + t * steps[pending]
            ok = np.all(trial[:, :n] >= opts.diag_floor, axis=1) & np.all(np.isfinite(trial), axis=1)
            if ok.any():
                rt = residual_batch(trial[ok], n)
                better = np.linalg.norm(rt, axis=1) < base_norm[pending[ok]]
                hit = pending[ok][better]
                z[idx[hit]] = trial[ok][better]
                r[idx[hit]] = rt[better]
                accepted[hit] = True
            t *= 0.5
        alive[idx[~accepted]] = False
    res_norm = np.max(np.abs(r), axis=1)
    converged &= np.isfinite(res_norm)
    return z, converged, res_norm


def _refine(z: np.ndarray, n: int, opts: SolverOptions) -> Optional[np.ndarray]:
    """Mixed-precision Newton for roots with a rank-deficient Jacobian.

    The residual is evaluated with mpmath at ``refine_dps`` digits and the
    correction solved with the double-precision Jacobian.  This keeps the
    iteration moving once the float residual drowns in rounding noise.
    """
    with mpmath.workdps(opts.refine_dps):
        zm = np.array([mpmath.mpf(float(v)) for v in z], dtype=object)
        zf = np.array(z, dtype=float)
        best, stale = np.inf, 0
        for _ in range(opts.refine_max_iter):
            r = residual_batch(zm[None, :], n)[0]
            rf = np.array([float(v) for v in r])
            size = float(np.max(np.abs(rf)))
            if size < 0.5 * best:
                best, stale = size, 0
            else:
                stale += 1
                if stale >= 12:
                    break
            step = np.linalg.lstsq(jacobian_batch(zf[None, :], n)[0], -rf, rcond=None)[0]
            if not np.all(np.isfinite(step)):
                return None
            zm = zm + np.array([mpmath.mpf(float(s)) for s in step], dtype=object)
            zf = np.array([float(v) for v in zm])
            if np.any(zf[:n] < opts.diag_floor):
                return None
            if np.max(np.abs(step)) <= 4e-17 * max(1.0, float(np.max(np.abs(zf)))):
                break
    final = np.max(np.abs(residual_batch(zf[None, :], n)[0]))
    return zf if final <= opts.newton_tol else None


def _near_singular(z: np.ndarray, n: int, opts: SolverOptions) -> np.ndarray:
    if z.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    sv = np.linalg.svd(jacobian_batch(z, n), compute_uv=False)
    return sv[:, -1] < opts.refine_cond * sv[:, 0]


def _lex_order(z: np.ndarray) -> np.ndarray:
    return np.lexsort(z.T[::-1]) if z.shape[0] else np.zeros(0, dtype=int)


def _refine_all(z: np.ndarray, n: int, opts: SolverOptions) -> np.ndarray:
    """Replace near-singular converged points by refined cluster roots."""
    if not opts.refine or z.shape[0] == 0:
        return z
    z = z.copy()
    todo = [int(i) for i in np.flatnonzero(_near_singular(z, n, opts))]
    todo.sort(key=lambda i: tuple(z[i]))
    while todo:
        head = todo[0]
        root = _refine(z[head], n, opts)
        if root is None:
            todo.pop(0)
            continue
        rest = []
        for i in todo:
            if np.max(np.abs(z[i] - root)) <= opts.refine_cluster_tol:
                z[i] = root
            else:
                rest.append(i)
        if head in rest:
            rest.remove(head)
        todo = rest
    return z


def _dedup(z: np.ndarray, res: np.ndarray, origin: np.ndarray, tol: float):
    """Greedy max-norm clustering in lexicographic order.

    Returns representatives (lowest residual member of each cluster) and the
    smallest start index contributing to each cluster.
    """
    order = _lex_order(z)
    reps: list[int] = []
    members: list[list[int]] = []
    for i in order:
        if reps:
            dist = np.max(np.abs(z[reps] - z[i]), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= tol:
                members[j].append(int(i))
                continue
        reps.append(int(i))
        members.append([int(i)])
    out, hits = [], []
    for group in members:
        best = min(group, key=lambda k: (res[k], tuple(z[k])))
        out.append(z[best])
        hits.append(int(np.min(origin[group])))
    return out, hits


def _solve_chunk(args):
    z0, n, opts = args
    return _newton_batch(z0, n, opts)


def sample_starts(n: int, count: int, opts: SolverOptions) -> np.ndarray:
    m = n * (n - 1) // 2
    rng = np.random.default_rng(opts.seed)
    unif = rng.random((count, n + m))
    lo, hi = opts.x_log_range
    ulo, uhi = opts.u_range
    x = np.exp(lo + (hi - lo) * unif[:, :n])
    u = ulo + (uhi - ulo) * unif[:, n:]
    return np.concatenate([x, u], axis=1)


def _run_newton(z0: np.ndarray, n: int, opts: SolverOptions):
    chunks = [z0[i : i + opts.chunk_size] for i in range(0, z0.shape[0], opts.chunk_size)]
    tasks = [(c, n, opts) for c in chunks]
    if opts.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            parts = list(pool.map(_solve_chunk, tasks))
    else:
        parts = [_solve_chunk(t) for t in tasks]
    if not parts:
        d = n + n * (n - 1) // 2
        return np.zeros((0, d)), np.zeros(0, dtype=bool), np.zeros(0)
    return tuple(np.concatenate(p) for p in zip(*parts))


def newton_solve(start: RatioCoordinates, opts: SolverOptions = SolverOptions()) -> Optional[CriticalPoint]:
    """Damped Newton from a single start; ``None`` on failure."""
    n = start.n
    z, conv, _ = _newton_batch(start.as_vector()[None, :], n, opts)
    if not conv[0]:
        return None
    z = _refine_all(z, n, opts)
    return critical_point(RatioCoordinates.from_vector(z[0], n), Normalization.STILDE_EQUALS_N)


def run_multistart(
    n: int,
    opts: SolverOptions = SolverOptions(),
    extra_starts: Sequence[RatioCoordinates] = (),
) -> MultistartResult:
    """Seeded multistart census of the critical points for ``F^n``.

    ``extra_starts`` are appended after the random starts.  The result is
    sorted lexicographically by ``(x, u)`` and every point is normalized to
    ``S~ = n``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    count = opts.n_starts(n)
    z0 = sample_starts(n, count, opts)
    if extra_starts:
        extra = np.array([c.as_vector() for c in extra_starts], dtype=float)
        if extra.shape[1] != z0.shape[1]:
            raise DomainError("extra start has the wrong dimension")
        z0 = np.concatenate([z0, extra])
    z, conv, res = _run_newton(z0, n, opts)
    origin = np.flatnonzero(conv)
    zc = _refine_all(z[conv], n, opts)
    resc = np.max(np.abs(residual_batch(zc, n)), axis=1) if zc.shape[0] else np.zeros(0)
    keep = resc <= opts.newton_tol
    reps, hits = _dedup(zc[keep], resc[keep], origin[keep], opts.dedup_tol)
    order = sorted(range(len(reps)), key=lambda i: tuple(reps[i]))
    reps, hits = [reps[i] for i in order], [hits[i] for i in order]
    points = [critical_point(RatioCoordinates.from_vector(r, n), Normalization.STILDE_EQUALS_N) for r in reps]
    log.info("n=%d: %d/%d starts converged, %d distinct roots", n, int(conv.sum()), z0.shape[0], len(points))
    return MultistartResult(n=n, points=points, starts=z0.shape[0], converged=int(conv.sum()), first_hit=hits)


def multistart(
    n: int,
    opts: SolverOptions = SolverOptions(),
    extra_starts: Sequence[RatioCoordinates] = (),
) -> list[CriticalPoint]:
    return run_multistart(n, opts, extra_starts).points


# -- normalization and reference matching -----------------------------------


def normalization_factor(pt: CriticalPoint, convention: Normalization) -> float:
    n = pt.n
    if convention is Normalization.STILDE_EQUALS_N:
        return float(np.sqrt(n / pt.s_tilde))
    if convention is Normalization.EINSTEIN_CONSTANT_ONE:
        return float(np.sqrt(4.0 * n / pt.s_tilde))
    return float(pt.volume ** (-1.0 / n))


def normalize(pt: CriticalPoint, convention: Normalization | str) -> CriticalPoint:
    """Rescale a critical point so that it satisfies ``convention``."""
    convention = Normalization(convention)
    if pt.s_tilde <= 0.0:
        raise DomainError("critical points of S~ at fixed volume have S~ > 0")
    c = normalization_factor(pt, convention)
    coords = RatioCoordinates(pt.coords.x * c, pt.coords.u)
    return critical_point(coords, convention)


@dataclass
class MatchReport:
    matched: list[tuple[int, int, float]]
    missing: list[int]
    extra: list[int]

    @property
    def ok(self) -> bool:
        return not self.missing and not self.extra

    def summary(self) -> str:
        total = len(self.matched) + len(self.missing)
        return f"{len(self.matched)}/{total} matched, {len(self.missing)} missing, {len(self.extra)} extra"


def verify_against_reference(
    points: Sequence[CriticalPoint],
    reference: Sequence[RatioCoordinates],
    tol: float = 1e-7,
) -> MatchReport:
    """Maximum bipartite matching between points and reference coordinates.

    A point may pair with a reference row when their ``(x, u)`` vectors agree
    within ``tol`` in max-norm.  Points not at ``S~ = n`` are renormalized.
    """
    pts = [
        p if p.normalization is Normalization.STILDE_EQUALS_N else normalize(p, Normalization.STILDE_EQUALS_N)
        for p in points
    ]
    if not pts or not reference:
        return MatchReport([], list(range(len(reference))), list(range(len(pts))))
    pz = np.array([p.coords.as_vector() for p in pts])
    rz = np.array([r.as_vector() for r in reference])
    if pz.shape[1] != rz.shape[1]:
        return MatchReport([], list(range(len(reference))), list(range(len(pts))))
    dist = np.max(np.abs(pz[:, None, :] - rz[None, :, :]), axis=2)
    graph = csr_matrix((dist <= tol).astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    matched = [(i, int(j), float(dist[i, j])) for i, j in enumerate(match) if j >= 0]
    used = {j for _, j, _ in matched}
    missing = [j for j in range(len(reference)) if j not in used]
    extra = [i for i, j in enumerate(match) if j < 0]
    return MatchReport(matched, missing, extra)


def with_starts(opts: SolverOptions, starts: int) -> SolverOptions:
    return replace(opts, starts=starts)
