"""Exact log-partition functions of the hierarchical ER and beta models.

Two routes are provided for each model:

* ``psi_*_bruteforce`` sums over all 2**m networks directly;
* ``psi_her`` / ``psi_hbeta`` enumerate only the 2**m' subsets of the
  non-isolated core and fold the isolated dyads in analytically
  (a ``(1 + e^q)`` factor per isolated dyad for HER, ``(1 + e^{b_i + b_j})``
  for HBeta).

Both return a :class:`LogPartition` holding psi and the expectation of every
sufficient statistic (the gradient of psi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .config import Limits, get_limits
from .errors import ComputationError, CoreTooLargeError, ValidationError
from .family import StatFamily
from .graphs import CliqueCatalog, CoreDecomposition, core_decompose, dyad_pair
from .suffstats import hbeta_stats_matrix, her_stats_matrix

__all__ = [
    "HERParams",
    "HBetaParams",
    "LogPartition",
    "CoreEnumerator",
    "her_family",
    "hbeta_family",
    "her_active",
    "hbeta_active",
    "psi_her_bruteforce",
    "psi_her",
    "psi_hbeta_bruteforce",
    "psi_hbeta",
]

BRUTEFORCE_MAX_M = 25
_CELL_BUDGET = 1 << 22


@dataclass(frozen=True)
class HERParams:
    """Hierarchical ER parameters: ``q[r-1]`` for star cliques of size r, ``t`` for triangles."""

    q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def zeros(cls, d: int) -> "HERParams":
        return cls(np.zeros(d), 0.0)

    @classmethod
    def from_vector(cls, v) -> "HERParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], v[-1])

    @property
    def d(self) -> int:
        return self.q.shape[0]

    def vector(self) -> np.ndarray:
        return np.append(self.q, self.t)

    def hierarchical(self) -> "HERParams":
        """Copy with every q^(r') zeroed once some q^(r), r >= 2, is zero."""
        q = self.q.copy()
        zero = np.flatnonzero(q[1:] == 0)
        if zero.size:
            q[zero[0] + 1 :] = 0.0
        return HERParams(q, self.t)

    def to_json(self) -> dict:
        return {"q": self.q.tolist(), "t": self.t}


@dataclass(frozen=True)
class HBetaParams:
    """Hierarchical beta parameters: ``beta[i-1, r-1]`` per hub node and size, ``tau[i-1]``."""

    beta: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        tau = np.asarray(self.tau, dtype=float).reshape(-1)
        if tau.shape[0] != beta.shape[0]:
            raise ValidationError("beta and tau must have one row per node")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def zeros(cls, n: int, d: int) -> "HBetaParams":
        return cls(np.zeros((n, d)), np.zeros(n))

    @classmethod
    def from_vector(cls, v, n: int, d: int) -> "HBetaParams":
        v = np.asarray(v, dtype=float)
        return cls(v[: n * d].reshape(n, d), v[n * d :])

    @property
    def n(self) -> int:
        return self.beta.shape[0]

    @property
    def d(self) -> int:
        return self.beta.shape[1]

    def vector(self) -> np.ndarray:
        return np.concatenate([self.beta.ravel(), self.tau])

    def hierarchical(self) -> "HBetaParams":
        """Copy with each row zeroed beyond its first zero at size r >= 2."""
        beta = self.beta.copy()
        for row in beta:
            zero = np.flatnonzero(row[1:] == 0)
            if zero.size:
                row[zero[0] + 1 :] = 0.0
        return HBetaParams(beta, self.tau.copy())

    def to_json(self) -> dict:
        return {"beta": self.beta.tolist(), "tau": self.tau.tolist()}


@dataclass(frozen=True)
class LogPartition:
    """psi and the expected sufficient statistic vector (same layout as the params vector)."""

    value: float
    expectations: np.ndarray


# ----------------------------------------------------------------------
# core enumeration


class CoreEnumerator:
    """Enumerates the 2**m' core subsets as bitmasks and maps each to a statistic row.

    A row is ``bits @ dyad_cols + activated @ clique_cols`` where ``bits`` are
    the core dyads present and ``activated`` flags the cliques of size >= 2
    whose members are all present.
    """

    def __init__(self, size: int, dyad_cols: np.ndarray, clique_masks: list[int], clique_cols: np.ndarray):
        self.size = size
        self.dyad_cols = np.asarray(dyad_cols, dtype=np.int64)
        self.dim = self.dyad_cols.shape[1]
        self.clique_masks = np.array(clique_masks, dtype=np.int64)
        self.clique_cols = np.asarray(clique_cols, dtype=np.int64).reshape(len(clique_masks), self.dim)

    @property
    def n_subsets(self) -> int:
        return 1 << self.size

    def chunk_size(self) -> int:
        per = max(1, self.size + len(self.clique_masks) + self.dim)
        return int(max(1, min(self.n_subsets, _CELL_BUDGET // per)))

    def rows(self, masks: np.ndarray) -> np.ndarray:
        bits = ((masks[:, None] >> np.arange(self.size, dtype=np.int64)) & 1).astype(np.int64)
        out = bits @ self.dyad_cols
        if len(self.clique_masks):
            act = (masks[:, None] & self.clique_masks[None, :]) == self.clique_masks[None, :]
            out += act.astype(np.int64) @ self.clique_cols
        return out

    def iter_rows(self):
        step = self.chunk_size()
        for start in range(0, self.n_subsets, step):
            masks = np.arange(start, min(start + step, self.n_subsets), dtype=np.int64)
            yield masks, self.rows(masks)

    def iter_compressed(self):
        for _, rows in self.iter_rows():
            uniq, counts = np.unique(rows, axis=0, return_counts=True)
            yield uniq.astype(float), np.log(counts.astype(float))

    def table(self, mem_budget: int):
        """Distinct rows with log multiplicities, or ``None`` if over the memory budget."""
        acc_rows, acc_counts = None, None
        for _, rows in self.iter_rows():
            uniq, counts = np.unique(rows, axis=0, return_counts=True)
            if acc_rows is None:
                acc_rows, acc_counts = uniq, counts
            else:
                allr = np.vstack([acc_rows, uniq])
                allc = np.concatenate([acc_counts, counts])
                acc_rows, inv = np.unique(allr, axis=0, return_inverse=True)
                acc_counts = np.bincount(inv.reshape(-1), weights=allc).astype(np.int64)
            if acc_rows.nbytes * 2 > mem_budget:
                return None
        return acc_rows.astype(float), np.log(acc_counts.astype(float))

    def log_weights(self, theta) -> np.ndarray:
        """Unnormalized log weight of every core subset, indexed by bitmask."""
        theta = np.asarray(theta, dtype=float)
        out = np.empty(self.n_subsets)
        for masks, rows in self.iter_rows():
            out[masks] = rows @ theta
        return out


def _check_cap(decomp: CoreDecomposition, limits: Limits):
    if decomp.core_size > limits.core_cap:
        raise CoreTooLargeError(
            f"dependency graph core has {decomp.core_size} non-isolated dyads; cap is {limits.core_cap}"
        )


def _core_cliques(catalog: CliqueCatalog, decomp: CoreDecomposition):
    out = []
    for c in catalog.higher():
        mask = 0
        for v in c.members:
            mask |= 1 << decomp.core_index_map[v]
        out.append((c, mask))
    return out


def _build(catalog, decomp, limits, key, dim, dyad_cols, clique_cols, seg_dirs, seg_counts):
    cliques = _core_cliques(catalog, decomp)
    enum = CoreEnumerator(decomp.core_size, dyad_cols, [mk for _, mk in cliques], clique_cols)
    tab = enum.table(limits.mem_budget)
    if tab is None:
        fam = StatFamily(dim, None, None, seg_dirs, seg_counts, source=enum.iter_compressed)
    else:
        fam = StatFamily(dim, tab[0], tab[1], seg_dirs, seg_counts)
    catalog._cache[key] = (fam, enum)
    return fam, enum


def _resolve(catalog, decomp, limits):
    limits = limits or get_limits()
    if decomp is None:
        decomp = catalog._cache.get("decomp")
        if decomp is None:
            decomp = core_decompose(catalog.dep)
            catalog._cache["decomp"] = decomp
    if decomp.n != catalog.n or decomp.core_size + len(decomp.isolated_dyads) != catalog.m:
        raise ValidationError("core decomposition does not match the clique catalog")
    _check_cap(decomp, limits)
    return decomp, limits


def her_family(catalog: CliqueCatalog, decomp: CoreDecomposition | None = None, limits: Limits | None = None):
    """Cached ``(StatFamily, CoreEnumerator)`` for the HER statistic (s1..sd, st)."""
    decomp, limits = _resolve(catalog, decomp, limits)
    key = ("her", limits)
    if key in catalog._cache:
        return catalog._cache[key]
    d = catalog.d
    dim = d + 1
    dyad_cols = np.zeros((decomp.core_size, dim), dtype=np.int64)
    dyad_cols[:, 0] = 1
    cliques = _core_cliques(catalog, decomp)
    clique_cols = np.zeros((len(cliques), dim), dtype=np.int64)
    for k, (c, _) in enumerate(cliques):
        clique_cols[k, c.size - 1 if c.kind == "star" else d] = 1
    n_iso = len(decomp.isolated_dyads)
    seg_dirs = np.zeros((1 if n_iso else 0, dim))
    if n_iso:
        seg_dirs[0, 0] = 1.0
    seg_counts = np.array([n_iso] if n_iso else [], dtype=float)
    return _build(catalog, decomp, limits, key, dim, dyad_cols, clique_cols, seg_dirs, seg_counts)


def hbeta_family(catalog: CliqueCatalog, decomp: CoreDecomposition | None = None, limits: Limits | None = None):
    """Cached ``(StatFamily, CoreEnumerator)`` for the HBeta statistic (flattened d_stats, d_t)."""
    decomp, limits = _resolve(catalog, decomp, limits)
    key = ("hbeta", limits)
    if key in catalog._cache:
        return catalog._cache[key]
    n, d = catalog.n, catalog.d
    dim = n * d + n
    dyad_cols = np.zeros((decomp.core_size, dim), dtype=np.int64)
    for p, v in enumerate(decomp.core_dyads):
        i, j = dyad_pair(v, n)
        dyad_cols[p, (i - 1) * d] += 1
        dyad_cols[p, (j - 1) * d] += 1
    cliques = _core_cliques(catalog, decomp)
    clique_cols = np.zeros((len(cliques), dim), dtype=np.int64)
    for k, (c, _) in enumerate(cliques):
        if c.kind == "star":
            clique_cols[k, (c.hub - 1) * d + c.size - 1] = 1
        else:
            nodes = set().union(*(dyad_pair(v, n) for v in c.members))
            for i in nodes:
                clique_cols[k, n * d + i - 1] = 1
    seg_dirs = np.zeros((len(decomp.isolated_dyads), dim))
    for k, v in enumerate(decomp.isolated_dyads):
        i, j = dyad_pair(v, n)
        seg_dirs[k, (i - 1) * d] += 1.0
        seg_dirs[k, (j - 1) * d] += 1.0
    seg_counts = np.ones(len(decomp.isolated_dyads))
    return _build(catalog, decomp, limits, key, dim, dyad_cols, clique_cols, seg_dirs, seg_counts)


def her_active(catalog: CliqueCatalog) -> np.ndarray:
    """Coordinates of (q1..qd, t) whose statistic is not identically zero."""
    active = np.ones(catalog.d + 1, dtype=bool)
    active[-1] = catalog.has_triangles
    return active


def hbeta_active(catalog: CliqueCatalog) -> np.ndarray:
    """Coordinates of (beta.ravel(), tau) whose statistic is not identically zero."""
    n, d = catalog.n, catalog.d
    beta = np.zeros((n, d), dtype=bool)
    if n >= 2:
        beta[:, 0] = True
    tau = np.zeros(n, dtype=bool)
    for c in catalog.higher():
        if c.kind == "star":
            beta[c.hub - 1, c.size - 1] = True
        else:
            for i in set().union(*(dyad_pair(v, n) for v in c.members)):
                tau[i - 1] = True
    return np.concatenate([beta.ravel(), tau])


def _her_theta(params: HERParams, catalog: CliqueCatalog) -> np.ndarray:
    if params.d != catalog.d:
        raise ValidationError(f"HER parameters have d={params.d}, catalog needs d={catalog.d}")
    theta = params.vector()
    if not np.all(np.isfinite(theta)):
        raise ComputationError("non-finite parameters")
    return theta


def _hbeta_theta(params: HBetaParams, catalog: CliqueCatalog) -> np.ndarray:
    if params.n != catalog.n or params.d != catalog.d:
        raise ValidationError(
            f"HBeta parameters have shape ({params.n}, {params.d}); catalog needs ({catalog.n}, {catalog.d})"
        )
    theta = params.vector()
    if not np.all(np.isfinite(theta)):
        raise ComputationError("non-finite parameters")
    return theta


def psi_her(params: HERParams, decomp: CoreDecomposition | None, catalog: CliqueCatalog, limits: Limits | None = None) -> LogPartition:
    fam, _ = her_family(catalog, decomp, limits)
    psi, mean = fam.moments(_her_theta(params, catalog))
    return LogPartition(float(psi), mean)


def psi_hbeta(params: HBetaParams, decomp: CoreDecomposition | None, catalog: CliqueCatalog, limits: Limits | None = None) -> LogPartition:
    fam, _ = hbeta_family(catalog, decomp, limits)
    psi, mean = fam.moments(_hbeta_theta(params, catalog))
    return LogPartition(float(psi), mean)


# ----------------------------------------------------------------------
# brute force over all networks


def _all_networks(m: int, members_per_net: int):
    total = 1 << m
    step = int(max(1, min(total, _CELL_BUDGET // max(1, members_per_net))))
    shifts = np.arange(m, dtype=np.int64)
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        yield ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def _bruteforce(stats_fn, theta, m, cost):
    if m > BRUTEFORCE_MAX_M:
        raise ValidationError(f"brute force limited to m <= {BRUTEFORCE_MAX_M}, got m={m}")
    logs = [logsumexp(stats_fn(X).astype(float) @ theta) for X in _all_networks(m, cost)]
    psi = float(logsumexp(np.array(logs)))
    mean = np.zeros_like(theta)
    for X in _all_networks(m, cost):
        T = stats_fn(X).astype(float)
        mean += np.exp(T @ theta - psi) @ T
    return LogPartition(psi, mean)


def _cost(catalog: CliqueCatalog) -> int:
    return catalog.m + sum(c.size for c in catalog.higher()) + catalog.n * (catalog.d + 1)


def psi_her_bruteforce(params: HERParams, catalog: CliqueCatalog, n: int | None = None) -> LogPartition:
    """psi by summing exp<q, s(x)> + t s_t(x) over all 2**m networks."""
    if n is not None and n != catalog.n:
        raise ValidationError("n does not match the catalog")
    theta = _her_theta(params, catalog)
    return _bruteforce(lambda X: her_stats_matrix(X, catalog), theta, catalog.m, _cost(catalog))


def psi_hbeta_bruteforce(params: HBetaParams, catalog: CliqueCatalog, n: int | None = None) -> LogPartition:
    """psi(beta, tau) by summing over all 2**m networks."""
    if n is not None and n != catalog.n:
        raise ValidationError("n does not match the catalog")
    theta = _hbeta_theta(params, catalog)

    def stats(X):
        ds, dt = hbeta_stats_matrix(X, catalog)
        return np.concatenate([ds.reshape(X.shape[0], -1), dt], axis=1)

    return _bruteforce(stats, theta, catalog.m, _cost(catalog))
