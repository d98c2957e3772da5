"""Sufficient statistics of the Erdos-Renyi, hierarchical ER and hierarchical beta models.

A clique is *activated* by a network when all its member dyads are present.
Every statistic here is a count of activated cliques, read off the catalog.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .graphs import CliqueCatalog, Network, dyad_endpoints, dyad_pair

__all__ = [
    "HERStats",
    "HBetaStats",
    "her_stats",
    "hbeta_stats",
    "er_stats",
    "her_stats_matrix",
    "hbeta_stats_matrix",
    "as_matrix",
]


@dataclass(frozen=True)
class HERStats:
    """``s[r-1]`` counts activated star cliques of size r; ``s_t`` activated triangles."""

    s: np.ndarray
    s_t: int

    def vector(self) -> np.ndarray:
        return np.append(self.s, self.s_t).astype(np.int64)


@dataclass(frozen=True)
class HBetaStats:
    """``d_stats[i-1, r-1]``: activated size-r stars with hub i; ``d_t[i-1]``: triangles at i."""

    d_stats: np.ndarray
    d_t: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.d_stats.ravel(), self.d_t]).astype(np.int64)


def as_matrix(x, n: int | None = None) -> np.ndarray:
    """Stack one network or a sequence of networks into an (N, m) 0/1 matrix."""
    if isinstance(x, Network):
        nets = [x]
    else:
        nets = list(x)
    if not nets:
        raise ValidationError("at least one network is required")
    if n is not None and any(net.n != n for net in nets):
        raise ValidationError(f"network size does not match the dependency graph (n={n})")
    return np.stack([net.dyads for net in nets]).astype(np.uint8)


def _groups(catalog: CliqueCatalog) -> dict:
    cached = catalog._cache.get("stat_groups")
    if cached is not None:
        return cached
    stars = {}
    for c in catalog.stars():
        if c.size >= 2:
            stars.setdefault(c.size, []).append(c)
    tri = catalog.triangles()
    groups = {
        "stars": {
            r: (
                np.array([c.members for c in cs], dtype=np.int64),
                np.array([c.hub - 1 for c in cs], dtype=np.int64),
            )
            for r, cs in sorted(stars.items())
        },
        "tri_members": np.array([c.members for c in tri], dtype=np.int64).reshape(-1, 3),
    }
    catalog._cache["stat_groups"] = groups
    return groups


def _tri_nodes(catalog: CliqueCatalog) -> np.ndarray:
    rows = []
    for c in catalog.triangles():
        nodes = sorted(set().union(*(dyad_pair(v, catalog.n) for v in c.members)))
        rows.append([v - 1 for v in nodes])
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def her_stats_matrix(X: np.ndarray, catalog: CliqueCatalog) -> np.ndarray:
    """HER statistics for every row of X, shape (N, d+1), columns s1..sd, s_t."""
    X = np.asarray(X, dtype=bool)
    if X.ndim != 2 or X.shape[1] != catalog.m:
        raise ValidationError(f"expected networks with {catalog.m} dyads, got shape {X.shape}")
    d = catalog.d
    out = np.zeros((X.shape[0], d + 1), dtype=np.int64)
    out[:, 0] = X.sum(axis=1)
    g = _groups(catalog)
    for r, (members, _) in g["stars"].items():
        out[:, r - 1] = X[:, members].all(axis=2).sum(axis=1)
    if len(g["tri_members"]):
        out[:, d] = X[:, g["tri_members"]].all(axis=2).sum(axis=1)
    return out


def hbeta_stats_matrix(X: np.ndarray, catalog: CliqueCatalog) -> tuple[np.ndarray, np.ndarray]:
    """HBeta statistics for every row of X: arrays of shape (N, n, d) and (N, n)."""
    X = np.asarray(X, dtype=bool)
    if X.ndim != 2 or X.shape[1] != catalog.m:
        raise ValidationError(f"expected networks with {catalog.m} dyads, got shape {X.shape}")
    n, d = catalog.n, catalog.d
    N = X.shape[0]
    ds = np.zeros((N, n, d), dtype=np.int64)
    ends = dyad_endpoints(n)
    Xi = X.astype(np.int64)
    for col in range(2):
        for i in range(n):
            ds[:, i, 0] += Xi[:, ends[:, col] == i].sum(axis=1)
    g = _groups(catalog)
    for r, (members, hubs) in g["stars"].items():
        act = X[:, members].all(axis=2).astype(np.int64)
        for i in np.unique(hubs):
            ds[:, i, r - 1] = act[:, hubs == i].sum(axis=1)
    dt = np.zeros((N, n), dtype=np.int64)
    if len(g["tri_members"]):
        act = X[:, g["tri_members"]].all(axis=2).astype(np.int64)
        nodes = _tri_nodes(catalog)
        for k in range(nodes.shape[0]):
            dt[:, nodes[k]] += act[:, k : k + 1]
    return ds, dt


def her_stats(x: Network, catalog: CliqueCatalog) -> HERStats:
    if x.n != catalog.n:
        raise ValidationError(f"network has n={x.n} but dependency graph has n={catalog.n}")
    row = her_stats_matrix(x.dyads[None, :], catalog)[0]
    return HERStats(row[:-1].copy(), int(row[-1]))


def hbeta_stats(x: Network, catalog: CliqueCatalog) -> HBetaStats:
    if x.n != catalog.n:
        raise ValidationError(f"network has n={x.n} but dependency graph has n={catalog.n}")
    ds, dt = hbeta_stats_matrix(x.dyads[None, :], catalog)
    return HBetaStats(ds[0], dt[0])


def er_stats(x: Network | Sequence[Network]) -> int:
    """Edge count (summed over the sample when several networks are given)."""
    return int(as_matrix(x).astype(np.int64).sum())
