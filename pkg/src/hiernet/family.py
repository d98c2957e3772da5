"""Finite exponential families with a factorized support.

The support of a hierarchical network model's sufficient statistic splits
into two independent parts:

* the core, whose statistic vectors come from enumerating every subset of
  the non-isolated dyads (stored as distinct vectors with multiplicities),
* independent binary "segments": isolated dyads, each adding a fixed
  direction vector to the statistic when present.

``StatFamily`` evaluates the log-partition function, mean and covariance of
the statistic in log space, finds the face of the convex support that holds
an observed mean statistic (the MLE exists iff that face is everything), and
restricts the family to a face.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import expit, logsumexp

from .errors import ComputationError

__all__ = ["StatFamily", "Face"]

SEG_FREE, SEG_ZERO, SEG_ONE = 0, 1, 2


@dataclass(frozen=True)
class Face:
    """Face of the convex support: used core points and per-segment state."""

    core_used: np.ndarray
    seg_state: np.ndarray

    @property
    def is_full(self) -> bool:
        return bool(self.core_used.all() and np.all(self.seg_state == SEG_FREE))


@dataclass
class StatFamily:
    """Exponential family ``p(z) ∝ exp<theta, T(z)>`` over a factorized support.

    Parameters
    ----------
    points, log_counts : distinct core statistic vectors (U, p) and the log of
        how many core configurations map to each.  ``None`` when the table is
        too large to keep and ``source`` streams it instead.
    seg_dirs, seg_counts : direction (K, p) and multiplicity (K,) of the
        independent binary segments.
    offset : statistic contribution that is always present.
    """

    dim: int
    points: np.ndarray | None
    log_counts: np.ndarray | None
    seg_dirs: np.ndarray
    seg_counts: np.ndarray
    offset: np.ndarray = None
    source: Callable[[], Iterator[tuple[np.ndarray, np.ndarray]]] | None = None
    _support_rank: int | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.offset is None:
            self.offset = np.zeros(self.dim)
        self.seg_dirs = np.asarray(self.seg_dirs, dtype=float).reshape(-1, self.dim)
        self.seg_counts = np.asarray(self.seg_counts, dtype=float).reshape(-1)

    @property
    def materialized(self) -> bool:
        return self.points is not None

    def _chunks(self):
        if self.materialized:
            yield self.points, self.log_counts
        else:
            yield from self.source()

    # ------------------------------------------------------------------
    def moments(self, theta, order: int = 1):
        """Return ``(psi, mean[, cov])`` of the statistic at natural parameter theta."""
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ComputationError("non-finite parameters")
        if self.materialized:
            a = self.log_counts + self.points @ theta
            psi_core = logsumexp(a)
            w = np.exp(a - psi_core)
            mean = w @ self.points
            cov = None
            if order >= 2:
                centred = self.points - mean
                cov = (centred * w[:, None]).T @ centred
        else:
            psi_core, mean, cov = self._stream_moments(theta, order)

        eta = self.seg_dirs @ theta
        psi = psi_core + float(self.seg_counts @ np.logaddexp(0.0, eta)) + float(self.offset @ theta)
        sig = expit(eta)
        mean = mean + (self.seg_counts * sig) @ self.seg_dirs + self.offset
        if order >= 2:
            wv = self.seg_counts * sig * (1.0 - sig)
            cov = cov + (self.seg_dirs * wv[:, None]).T @ self.seg_dirs
            return psi, mean, cov
        return psi, mean

    def _stream_moments(self, theta, order):
        top = -np.inf
        for pts, lc in self._chunks():
            top = max(top, float(np.max(lc + pts @ theta)))
        z = 0.0
        s1 = np.zeros(self.dim)
        s2 = np.zeros((self.dim, self.dim)) if order >= 2 else None
        for pts, lc in self._chunks():
            w = np.exp(lc + pts @ theta - top)
            z += w.sum()
            s1 += w @ pts
            if order >= 2:
                s2 += (pts * w[:, None]).T @ pts
        mean = s1 / z
        cov = s2 / z - np.outer(mean, mean) if order >= 2 else None
        return top + np.log(z), mean, cov

    def log_partition(self, theta) -> float:
        return self.moments(theta, order=1)[0]

    # ------------------------------------------------------------------
    def support_rank(self) -> int:
        """Dimension of the affine hull of the statistic's support."""
        if self._support_rank is None:
            if not self.materialized:
                raise ComputationError("support rank needs a materialized core table")
            rows = [self.points - self.points[0]] if len(self.points) > 1 else []
            rows.append(self.seg_dirs)
            mat = np.vstack(rows) if rows else np.zeros((0, self.dim))
            self._support_rank = int(np.linalg.matrix_rank(mat)) if mat.size else 0
        return self._support_rank

    def face(self, tbar) -> Face | None:
        """Smallest face of the convex support containing the mean statistic ``tbar``.

        Solved as one linear program: find nonnegative weights on core points
        and fractional segment usages reproducing ``tbar`` while touching as
        many points and segment ends as possible.  Returns ``None`` when the
        core table is not materialized.
        """
        if not self.materialized:
            return None
        t = np.asarray(tbar, dtype=float) - self.offset
        U, p = self.points.shape
        K = self.seg_dirs.shape[0]
        scale = np.maximum(1.0, np.max(np.abs(np.vstack([self.points, self.seg_dirs * self.seg_counts[:, None], t[None, :]])), axis=0))
        P = (self.points - t) / scale
        V = (self.seg_dirs * self.seg_counts[:, None]) / scale
        nv = 2 * U + 3 * K
        # variable layout: w(U) y(K) s(U) a(K) b(K)
        iw, iy, is_, ia, ib = 0, U, U + K, 2 * U + K, 2 * U + 2 * K
        A_eq = sparse.hstack(
            [sparse.csr_matrix(P.T), sparse.csr_matrix(V.T), sparse.csr_matrix((p, U + 2 * K))]
        ).tocsr()
        b_eq = np.zeros(p)
        rows, cols, vals = [], [], []
        r = 0
        for j in range(U):  # s_j - w_j <= 0
            rows += [r, r]
            cols += [is_ + j, iw + j]
            vals += [1.0, -1.0]
            r += 1
        for k in range(K):  # a_k - y_k <= 0
            rows += [r, r]
            cols += [ia + k, iy + k]
            vals += [1.0, -1.0]
            r += 1
        for k in range(K):  # b_k + y_k - sum(w) <= 0
            rows += [r, r] + [r] * U
            cols += [ib + k, iy + k] + list(range(iw, iw + U))
            vals += [1.0, 1.0] + [-1.0] * U
            r += 1
        A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(r, nv))
        b_ub = np.zeros(r)
        c = np.zeros(nv)
        c[is_:] = -1.0
        bounds = [(0, None)] * (U + K) + [(0, 1)] * (U + 2 * K)
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status != 0:
            raise ComputationError(f"facial-set linear program failed: {res.message}")
        x = res.x
        used = x[is_ : is_ + U] > 0.5
        a = x[ia : ia + K] > 0.5
        b = x[ib : ib + K] > 0.5
        state = np.full(K, SEG_FREE, dtype=np.int64)
        state[~a] = SEG_ZERO
        state[a & ~b] = SEG_ONE
        if not used.any():
            raise ComputationError("observed statistic lies outside the convex support")
        return Face(used, state)

    def restrict(self, face: Face) -> "StatFamily":
        """The family conditioned on the statistic lying in ``face``."""
        keep = face.seg_state == SEG_FREE
        ones = face.seg_state == SEG_ONE
        offset = self.offset + (self.seg_counts[ones, None] * self.seg_dirs[ones]).sum(axis=0)
        return StatFamily(
            self.dim,
            self.points[face.core_used],
            self.log_counts[face.core_used],
            self.seg_dirs[keep],
            self.seg_counts[keep],
            offset,
        )
