"""Networks, dependency graphs and clique catalogs.

Network nodes are labelled 1..n in the public API.  Dyads (unordered node
pairs) are stored as 0-based linear indices in lexicographic order
12, 13, ..., 1n, 23, ..., (n-1)n, so a network is a 0/1 vector of length
m = n(n-1)/2 and a dependency graph is a simple graph on those m indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import MarkovViolationError, ValidationError

__all__ = [
    "n_dyads",
    "dyad_index",
    "dyad_pair",
    "dyad_label",
    "dyad_endpoints",
    "Network",
    "DependencyGraph",
    "Clique",
    "CliqueCatalog",
    "CoreDecomposition",
    "build_line_graph",
    "validate_markov",
    "enumerate_cliques",
    "core_decompose",
    "is_exchangeable_dep",
    "permute_network",
    "star_clique_dep",
]


def n_dyads(n: int) -> int:
    """Number of dyads m = n(n-1)/2 of a network on ``n`` nodes."""
    if n < 1:
        raise ValidationError(f"node count must be >= 1, got {n}")
    return n * (n - 1) // 2


def dyad_index(i: int, j: int, n: int) -> int:
    """Linear index of dyad ``ij`` (1-based nodes, ``i < j``) among the m dyads.

    >>> dyad_index(1, 2, 3), dyad_index(2, 3, 3), dyad_index(3, 5, 6)
    (0, 2, 10)
    """
    if not (1 <= i < j <= n):
        raise ValidationError(f"invalid dyad ({i}, {j}) for n={n}; need 1 <= i < j <= n")
    return (i - 1) * n - i * (i - 1) // 2 + (j - i) - 1


def dyad_pair(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`dyad_index`: the 1-based node pair of linear index ``k``."""
    m = n_dyads(n)
    if not (0 <= k < m):
        raise ValidationError(f"dyad index {k} out of range for n={n} (m={m})")
    i = 1
    row = n - 1
    while k >= row:
        k -= row
        i += 1
        row -= 1
    return i, i + 1 + k


def dyad_label(k: int, n: int) -> str:
    i, j = dyad_pair(k, n)
    return f"{i}-{j}"


def dyad_endpoints(n: int) -> np.ndarray:
    """Array of shape (m, 2) holding the 0-based endpoints of every dyad."""
    iu = np.triu_indices(n, k=1)
    return np.column_stack(iu).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected labelled network stored as a dyad bit-vector."""

    n: int
    dyads: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.dyads, dtype=np.uint8).copy()
        if arr.ndim != 1 or arr.shape[0] != n_dyads(self.n):
            raise ValidationError(
                f"network on {self.n} nodes needs {n_dyads(self.n)} dyads, got shape {arr.shape}"
            )
        if np.any(arr > 1):
            raise ValidationError("dyad values must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "dyads", arr)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Network":
        x = np.zeros(n_dyads(n), dtype=np.uint8)
        for i, j in edges:
            if i > j:
                i, j = j, i
            x[dyad_index(i, j, n)] = 1
        return cls(n, x)

    @classmethod
    def empty(cls, n: int) -> "Network":
        return cls(n, np.zeros(n_dyads(n), dtype=np.uint8))

    @classmethod
    def complete(cls, n: int) -> "Network":
        return cls(n, np.ones(n_dyads(n), dtype=np.uint8))

    @property
    def m(self) -> int:
        return self.dyads.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        return [dyad_pair(int(k), self.n) for k in np.flatnonzero(self.dyads)]

    def edge_count(self) -> int:
        return int(self.dyads.sum())

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.dyads, other.dyads)

    def __hash__(self):
        return hash((self.n, self.dyads.tobytes()))

    def __repr__(self):
        return f"Network(n={self.n}, edges={self.edges()})"


@dataclass(frozen=True)
class DependencyGraph:
    """Simple undirected graph on the m dyad indices of a network base on n nodes."""

    n: int
    edges: frozenset

    def __post_init__(self):
        m = n_dyads(self.n)
        clean = set()
        for e in self.edges:
            a, b = (int(v) for v in e)
            if a == b:
                raise ValidationError(f"self-loop on dyad {dyad_label(a, self.n)}")
            if not (0 <= a < m and 0 <= b < m):
                raise ValidationError(f"dyad index out of range in edge ({a}, {b}) for n={self.n}")
            clean.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def empty(cls, n: int) -> "DependencyGraph":
        return cls(n, frozenset())

    @classmethod
    def from_dyad_pairs(cls, n: int, pairs: Iterable) -> "DependencyGraph":
        """Build from pairs of 1-based dyads, e.g. ``[((1, 2), (1, 3))]``."""
        edges = set()
        for (i, j), (k, l) in pairs:
            a = dyad_index(min(i, j), max(i, j), n)
            b = dyad_index(min(k, l), max(k, l), n)
            edges.add((a, b))
        return cls(n, frozenset(edges))

    @property
    def m(self) -> int:
        return n_dyads(self.n)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> list[int]:
        """Neighbour sets as Python-int bitsets, one per dyad."""
        adj = [0] * self.m
        for a, b in self.edges:
            adj[a] |= 1 << b
            adj[b] |= 1 << a
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def without_edge(self, a: int, b: int) -> "DependencyGraph":
        return DependencyGraph(self.n, self.edges - {(min(a, b), max(a, b))})

    def with_edge(self, a: int, b: int) -> "DependencyGraph":
        return DependencyGraph(self.n, self.edges | {(min(a, b), max(a, b))})


@dataclass(frozen=True)
class Clique:
    """A clique of the dependency graph.

    ``members`` are sorted dyad indices.  ``kind`` is ``"star"`` or
    ``"triangle"``; stars of size >= 2 carry their 1-based ``hub`` node.
    """

    members: tuple
    kind: str
    hub: int | None = None

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def mask(self) -> int:
        out = 0
        for v in self.members:
            out |= 1 << v
        return out


@dataclass(frozen=True, eq=False)
class CliqueCatalog:
    """Every clique of a Markov-valid dependency graph, sorted by size then members."""

    dep: DependencyGraph
    cliques: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.dep.n

    @property
    def m(self) -> int:
        return self.dep.m

    @property
    def d(self) -> int:
        """Largest star-clique size (1 for an edgeless dependency graph)."""
        return max((c.size for c in self.cliques if c.kind == "star"), default=1)

    @property
    def has_triangles(self) -> bool:
        return any(c.kind == "triangle" for c in self.cliques)

    def of_size(self, r: int) -> list[Clique]:
        return [c for c in self.cliques if c.size == r]

    def stars(self, r: int | None = None) -> list[Clique]:
        return [c for c in self.cliques if c.kind == "star" and (r is None or c.size == r)]

    def triangles(self) -> list[Clique]:
        return [c for c in self.cliques if c.kind == "triangle"]

    def higher(self) -> list[Clique]:
        """Cliques of size >= 2 (the ones that involve dependence)."""
        return [c for c in self.cliques if c.size >= 2]

    def counts(self) -> dict:
        out = {}
        for c in self.cliques:
            key = (c.size, c.kind)
            out[key] = out.get(key, 0) + 1
        return out


@dataclass(frozen=True)
class CoreDecomposition:
    """Split of the dyads into the non-isolated core and the isolated remainder.

    ``core_dyads[p]`` is the dyad index at core position ``p``;
    ``core_adjacency`` gives core neighbourhoods as bitsets over positions.
    """

    n: int
    core_dyads: tuple
    isolated_dyads: tuple
    core_adjacency: tuple
    core_index_map: dict

    @property
    def core_size(self) -> int:
        return len(self.core_dyads)

    @property
    def m(self) -> int:
        return n_dyads(self.n)


def build_line_graph(n: int) -> DependencyGraph:
    """Line graph of the complete graph K_n: dyads adjacent iff they share a node."""
    if n < 2:
        raise ValidationError(f"line graph needs n >= 2, got {n}")
    pairs = [dyad_pair(k, n) for k in range(n_dyads(n))]
    edges = set()
    for a, b in itertools.combinations(range(len(pairs)), 2):
        if set(pairs[a]) & set(pairs[b]):
            edges.add((a, b))
    return DependencyGraph(n, frozenset(edges))


def validate_markov(dep: DependencyGraph) -> list[tuple[str, str]]:
    """Edges of ``dep`` joining dyads with no common node, as label pairs.

    An empty list means the Markov dependence property holds.
    """
    bad = []
    for a, b in dep.sorted_edges():
        if not set(dyad_pair(a, dep.n)) & set(dyad_pair(b, dep.n)):
            bad.append((dyad_label(a, dep.n), dyad_label(b, dep.n)))
    return bad


def _classify(members: tuple, n: int) -> Clique:
    if len(members) == 1:
        return Clique(members, "star", None)
    node_sets = [set(dyad_pair(v, n)) for v in members]
    common = set.intersection(*node_sets)
    if len(common) == 1:
        return Clique(members, "star", common.pop())
    if len(members) == 3 and len(set.union(*node_sets)) == 3:
        return Clique(members, "triangle", None)
    labels = ", ".join(dyad_label(v, n) for v in members)
    raise MarkovViolationError([(labels, "neither star nor triangle")])


def enumerate_cliques(dep: DependencyGraph, validate: bool = True) -> CliqueCatalog:
    """All cliques (every size, not only maximal) of ``dep``, classified.

    Each clique is grown only by higher-indexed common neighbours, so it is
    produced exactly once.
    """
    if validate:
        bad = validate_markov(dep)
        if bad:
            raise MarkovViolationError(bad)
    adj = dep.adjacency()
    found = []

    def extend(members, candidates):
        found.append(members)
        while candidates:
            low = candidates & -candidates
            v = low.bit_length() - 1
            candidates ^= low
            higher = adj[v] & ~((1 << (v + 1)) - 1)
            extend(members + (v,), candidates & higher)

    for v in range(dep.m):
        extend((v,), adj[v] & ~((1 << (v + 1)) - 1))
    found.sort(key=lambda c: (len(c), c))
    return CliqueCatalog(dep, tuple(_classify(c, dep.n) for c in found))


def core_decompose(dep: DependencyGraph) -> CoreDecomposition:
    deg = dep.degrees()
    core = tuple(int(v) for v in np.flatnonzero(deg > 0))
    isolated = tuple(int(v) for v in np.flatnonzero(deg == 0))
    index = {v: p for p, v in enumerate(core)}
    adj = [0] * len(core)
    for a, b in dep.edges:
        pa, pb = index[a], index[b]
        adj[pa] |= 1 << pb
        adj[pb] |= 1 << pa
    return CoreDecomposition(dep.n, core, isolated, tuple(adj), index)


def is_exchangeable_dep(dep: DependencyGraph) -> bool:
    """True iff the hierarchical ER model on ``dep`` is invariant under node relabelling."""
    if not dep.edges:
        return True
    return dep.n >= 2 and dep.edges == build_line_graph(dep.n).edges


def permute_network(x: Network, perm: Sequence[int]) -> Network:
    """Relabel nodes: node ``i`` of ``x`` becomes node ``perm[i-1]`` (1-based)."""
    if sorted(perm) != list(range(1, x.n + 1)):
        raise ValidationError(f"not a permutation of 1..{x.n}: {perm}")
    return Network.from_edges(x.n, [(perm[i - 1], perm[j - 1]) for i, j in x.edges()])


def star_clique_dep(n: int, sizes: Sequence[int], hubs: Sequence[int] | None = None) -> DependencyGraph:
    """Dependency graph made of disjoint star cliques plus isolated dyads.

    The clique with hub ``h`` and size ``c`` consists of dyads
    ``h(h+1), ..., h(h+c)``.  Hubs default to 1, 2, 3, ...
    """
    if hubs is None:
        hubs = list(range(1, len(sizes) + 1))
    if len(hubs) != len(sizes):
        raise ValidationError("one hub per clique size is required")
    edges = set()
    used = set()
    for h, c in zip(hubs, sizes):
        if c < 1 or h + c > n:
            raise ValidationError(f"star clique of size {c} at hub {h} does not fit in n={n}")
        members = [dyad_index(h, h + s, n) for s in range(1, c + 1)]
        if used & set(members):
            raise ValidationError("star cliques overlap")
        used |= set(members)
        for a, b in itertools.combinations(members, 2):
            edges.add((a, b))
    return DependencyGraph(n, frozenset(edges))
