"""Hierarchical p1 model for directed networks, normalized by enumeration.

Each dyad ``(i, j)``, ``i < j``, takes one of four states written ``ab``:
``00`` no arrow, ``10`` an arrow i -> j, ``01`` an arrow j -> i, ``11`` both.
Internally a state is the code ``a + 2 b``.

The unnormalized log-density is a sum of clique terms over the hierarchical
catalog of the dependency graph, with density and reciprocity effects fixed
at zero:

* a dyad ``ij`` contributes ``(alpha_i + beta_j) out(i, j) + (alpha_j + beta_i) out(j, i)``;
* a star of size r >= 2 with hub h contributes ``beta_h^(r)`` when every member
  dyad has an arrow leaving h and ``alpha_h^(r)`` when every member dyad has an
  arrow entering h;
* a triangle on ``i < j < k`` contributes five cyclic/transitive terms in the
  triangle parameters, one of which carries ``tau_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError
from .graphs import CliqueCatalog, dyad_index, dyad_pair, n_dyads

__all__ = [
    "STATE_LABELS",
    "DirectedNetwork",
    "P1Params",
    "p1_log_unnorm",
    "p1_log_unnorm_many",
    "p1_psi_enum",
    "p1_prob",
    "p1_all_states",
    "parse_directed_network",
    "format_directed_network",
]

STATE_LABELS = ("00", "10", "01", "11")
P1_MAX_N = 4


@dataclass(frozen=True, eq=False)
class DirectedNetwork:
    """Directed network as one state code (0..3) per lexicographic dyad."""

    n: int
    dyad_states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.dyad_states, dtype=np.uint8).reshape(-1).copy()
        if arr.shape[0] != n_dyads(self.n):
            raise ValidationError(f"directed network on {self.n} nodes needs {n_dyads(self.n)} dyad states")
        if np.any(arr > 3):
            raise ValidationError("dyad states must be codes 0..3")
        arr.setflags(write=False)
        object.__setattr__(self, "dyad_states", arr)

    @classmethod
    def from_labels(cls, n: int, labels) -> "DirectedNetwork":
        try:
            return cls(n, [STATE_LABELS.index(s) for s in labels])
        except ValueError:
            raise ValidationError(f"states must be among {STATE_LABELS}") from None

    @classmethod
    def from_arcs(cls, n: int, arcs) -> "DirectedNetwork":
        """Build from directed arcs ``(u, v)`` meaning u -> v."""
        s = np.zeros(n_dyads(n), dtype=np.uint8)
        for u, v in arcs:
            if u == v:
                raise ValidationError("self-loops are not allowed")
            k = dyad_index(min(u, v), max(u, v), n)
            s[k] |= 1 if u < v else 2
        return cls(n, s)

    def labels(self) -> list[str]:
        return [STATE_LABELS[int(c)] for c in self.dyad_states]

    def __eq__(self, other):
        if not isinstance(other, DirectedNetwork):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.dyad_states, other.dyad_states)

    def __hash__(self):
        return hash((self.n, self.dyad_states.tobytes()))


@dataclass(frozen=True)
class P1Params:
    """``alpha``/``beta``: (n, d) per-node, per-size effects; ``alpha_t``, ``beta_t``, ``tau``: (n,)."""

    alpha: np.ndarray
    beta: np.ndarray
    alpha_t: np.ndarray
    beta_t: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        if alpha.shape != beta.shape:
            raise ValidationError("alpha and beta must have the same shape")
        n = alpha.shape[0]
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        for name in ("alpha_t", "beta_t", "tau"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if v.shape[0] != n:
                raise ValidationError(f"{name} must have one entry per node")
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls, n: int, d: int) -> "P1Params":
        z = np.zeros(n)
        return cls(np.zeros((n, d)), np.zeros((n, d)), z, z, z)

    @classmethod
    def random(cls, n: int, d: int, rng, scale: float = 1.0) -> "P1Params":
        u = lambda *s: rng.uniform(-scale, scale, size=s)  # noqa: E731
        return cls(u(n, d), u(n, d), u(n), u(n), u(n))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def d(self) -> int:
        return self.alpha.shape[1]

    def hierarchical(self) -> "P1Params":
        """Zero each row of ``alpha`` and ``beta`` beyond its first zero at size r >= 2."""

        def cut(mat):
            mat = mat.copy()
            for row in mat:
                zero = np.flatnonzero(row[1:] == 0)
                if zero.size:
                    row[zero[0] + 1 :] = 0.0
            return mat

        return P1Params(cut(self.alpha), cut(self.beta), self.alpha_t, self.beta_t, self.tau)

    def dyadic(self) -> "P1Params":
        """Copy keeping only the size-1 effects."""
        alpha = np.zeros_like(self.alpha)
        beta = np.zeros_like(self.beta)
        alpha[:, 0] = self.alpha[:, 0]
        beta[:, 0] = self.beta[:, 0]
        z = np.zeros(self.n)
        return P1Params(alpha, beta, z, z, z)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "alpha_t": self.alpha_t.tolist(),
            "beta_t": self.beta_t.tolist(),
            "tau": self.tau.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict, n: int, d: int) -> "P1Params":
        """Missing entries default to zero; short rows are padded to ``d`` columns."""

        def mat(key):
            if key not in obj:
                return np.zeros((n, d))
            m = np.atleast_2d(np.asarray(obj[key], dtype=float))
            if m.shape[0] != n or m.shape[1] > d:
                raise ValidationError(f"{key} must be {n} rows of at most {d} values")
            return np.hstack([m, np.zeros((n, d - m.shape[1]))])

        def vec(key):
            return np.asarray(obj.get(key, np.zeros(n)), dtype=float)

        try:
            return cls(mat("alpha"), mat("beta"), vec("alpha_t"), vec("beta_t"), vec("tau"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed p1 parameters: {exc}") from exc


def _out(S, u, v, n):
    """Indicator (per row of codes S) of an arrow u -> v."""
    if u < v:
        return S[:, dyad_index(u, v, n)] & 1
    return (S[:, dyad_index(v, u, n)] >> 1) & 1


def p1_log_unnorm_many(S, params: P1Params, catalog: CliqueCatalog) -> np.ndarray:
    """Unnormalized log-density for every row of the (N, m) state-code matrix ``S``."""
    n, d = catalog.n, catalog.d
    S = np.asarray(S, dtype=np.int64)
    if S.ndim != 2 or S.shape[1] != catalog.m:
        raise ValidationError(f"expected dyad states of width {catalog.m}")
    if params.n != n or params.d != d:
        raise ValidationError(f"p1 parameters have shape ({params.n}, {params.d}); model needs ({n}, {d})")
    al, be = params.alpha, params.beta
    at, bt, tau = params.alpha_t, params.beta_t, params.tau
    total = np.zeros(S.shape[0])
    for k in range(catalog.m):
        i, j = dyad_pair(k, n)
        total += (al[i - 1, 0] + be[j - 1, 0]) * _out(S, i, j, n)
        total += (al[j - 1, 0] + be[i - 1, 0]) * _out(S, j, i, n)
    for c in catalog.higher():
        if c.kind == "star":
            h = c.hub
            others = [a if b == h else b for a, b in (dyad_pair(v, n) for v in c.members)]
            leave = np.ones(S.shape[0], dtype=np.int64)
            enter = np.ones(S.shape[0], dtype=np.int64)
            for o in others:
                leave = leave * _out(S, h, o, n)
                enter = enter * _out(S, o, h, n)
            total += be[h - 1, c.size - 1] * leave + al[h - 1, c.size - 1] * enter
        else:
            i, j, k = sorted(set().union(*(dyad_pair(v, n) for v in c.members)))
            A, A_ = _out(S, i, j, n), _out(S, j, i, n)
            B, B_ = _out(S, j, k, n), _out(S, k, j, n)
            C, C_ = _out(S, k, i, n), _out(S, i, k, n)
            I, J, K = i - 1, j - 1, k - 1
            total += (bt[J] + at[K]) * (A * B_ * C)
            total += (bt[K] + at[I]) * (A * B * C_)
            total += (bt[J] + at[I]) * (A * B_ * C_)
            total += (tau[I] + at[J]) * (A_ * B * C)
            total += (bt[K] + at[J]) * (A_ * B * C_)
    return total


def p1_log_unnorm(x: DirectedNetwork, params: P1Params, catalog: CliqueCatalog) -> float:
    if x.n != catalog.n:
        raise ValidationError(f"directed network has n={x.n} but the model has n={catalog.n}")
    return float(p1_log_unnorm_many(x.dyad_states[None, :], params, catalog)[0])


def p1_all_states(n: int) -> np.ndarray:
    """All 4**m dyad-state vectors, row ``c`` holding the base-4 digits of ``c`` (dyad 0 least significant)."""
    if n > P1_MAX_N:
        raise ValidationError(f"p1 enumeration is limited to n <= {P1_MAX_N}")
    m = n_dyads(n)
    codes = np.arange(4**m, dtype=np.int64)
    return (codes[:, None] >> (2 * np.arange(m, dtype=np.int64))) & 3


def p1_psi_enum(params: P1Params, catalog: CliqueCatalog, n: int | None = None) -> float:
    """Log normalizing constant by summing over all 4**m directed networks."""
    n = catalog.n if n is None else n
    if n != catalog.n:
        raise ValidationError("n does not match the clique catalog")
    return float(logsumexp(p1_log_unnorm_many(p1_all_states(n), params, catalog)))


def p1_prob(x: DirectedNetwork, params: P1Params, catalog: CliqueCatalog, n: int | None = None) -> float:
    return float(np.exp(p1_log_unnorm(x, params, catalog) - p1_psi_enum(params, catalog, n)))


def parse_directed_network(text: str) -> DirectedNetwork:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows:
        raise ValidationError("empty file: expected header 'n <N> directed'")
    lineno, tok = rows[0]
    if len(tok) != 3 or tok[0] != "n" or tok[2] != "directed":
        raise ValidationError(f"line {lineno}: expected header 'n <N> directed'")
    try:
        n = int(tok[1])
    except ValueError:
        raise ValidationError(f"line {lineno}: node count must be an integer") from None
    if n < 1:
        raise ValidationError(f"line {lineno}: node count must be >= 1")
    states = np.zeros(n_dyads(n), dtype=np.uint8)
    for lineno, tok in rows[1:]:
        if len(tok) != 3 or tok[2] not in STATE_LABELS:
            raise ValidationError(f"line {lineno}: expected '<i> <j> <state>' with state in {STATE_LABELS}")
        try:
            i, j = int(tok[0]), int(tok[1])
        except ValueError:
            raise ValidationError(f"line {lineno}: node labels must be integers") from None
        if not (1 <= i < j <= n):
            raise ValidationError(f"line {lineno}: need 1 <= i < j <= {n}")
        states[dyad_index(i, j, n)] = STATE_LABELS.index(tok[2])
    return DirectedNetwork(n, states)


def format_directed_network(x: DirectedNetwork) -> str:
    out = [f"n {x.n} directed\n"]
    for k, c in enumerate(x.dyad_states):
        if c:
            i, j = dyad_pair(k, x.n)
            out.append(f"{i} {j} {STATE_LABELS[int(c)]}\n")
    return "".join(out)
