"""Network simulation and the likelihood-ratio simulation study.

Two generators are provided:

* exact draws from a hierarchical ER model, using the core enumeration for
  the dependent dyads and independent Bernoulli draws for isolated ones;
* latent-Gaussian thresholding: a random correlation matrix is constrained
  so that its concentration matrix vanishes on the missing edges of the
  dependency graph, a Gaussian vector is drawn and its signs give the dyads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, logsumexp

from .config import Limits, thread_count
from .errors import ComputationError, ConvergenceError, HiernetError, ValidationError
from .estimation import FitOptions, LRTReport, lrt
from .graphs import (
    CliqueCatalog,
    CoreDecomposition,
    DependencyGraph,
    Network,
    core_decompose,
    enumerate_cliques,
    n_dyads,
    star_clique_dep,
)
from .partition import HERParams, _her_theta, her_family

__all__ = [
    "sample_exact_her",
    "exact_her_probabilities",
    "LatentGaussianSpec",
    "random_spd",
    "enforce_zeros",
    "sample_gaussian_threshold",
    "StudyConfig",
    "StudyRecord",
    "StudyResult",
    "run_study",
    "write_study_csv",
    "DEFAULT_SHIFT",
]

DEFAULT_SHIFT = 4.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _nodes_for(m: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * m)) / 2))
    if n_dyads(n) != m:
        raise ValidationError(f"{m} is not a valid dyad count n(n-1)/2")
    return n


# ----------------------------------------------------------------------
# exact sampling


def _core_log_probs(params: HERParams, catalog: CliqueCatalog, decomp: CoreDecomposition, limits):
    fam, enum = her_family(catalog, decomp, limits)
    lw = enum.log_weights(_her_theta(params, catalog))
    return lw - logsumexp(lw)


def sample_exact_her(
    params: HERParams,
    catalog: CliqueCatalog,
    decomp: CoreDecomposition | None = None,
    count: int = 1,
    seed=0,
    limits: Limits | None = None,
) -> list[Network]:
    """Independent exact draws from the hierarchical ER model."""
    if count < 0:
        raise ValidationError("count must be nonnegative")
    decomp = decomp or core_decompose(catalog.dep)
    rng = _rng(seed)
    logp = _core_log_probs(params, catalog, decomp, limits)
    masks = rng.choice(logp.size, size=count, p=np.exp(logp))
    X = np.zeros((count, catalog.m), dtype=np.uint8)
    core = np.asarray(decomp.core_dyads, dtype=np.int64)
    if core.size:
        X[:, core] = (masks[:, None] >> np.arange(core.size)) & 1
    iso = np.asarray(decomp.isolated_dyads, dtype=np.int64)
    if iso.size:
        p = expit(params.q[0])
        X[:, iso] = rng.random((count, iso.size)) < p
    return [Network(catalog.n, row) for row in X]


def exact_her_probabilities(params: HERParams, catalog: CliqueCatalog) -> np.ndarray:
    """Probability of every network, indexed by the integer whose bit k is dyad k (m <= 20)."""
    if catalog.m > 20:
        raise ValidationError("full probability tables are limited to m <= 20")
    from .partition import psi_her_bruteforce
    from .suffstats import her_stats_matrix

    codes = np.arange(1 << catalog.m, dtype=np.int64)
    X = ((codes[:, None] >> np.arange(catalog.m)) & 1).astype(np.uint8)
    theta = _her_theta(params, catalog)
    psi = psi_her_bruteforce(params, catalog).value
    return np.exp(her_stats_matrix(X, catalog) @ theta - psi)


# ----------------------------------------------------------------------
# latent Gaussian generator


@dataclass(frozen=True)
class LatentGaussianSpec:
    """Latent Gaussian with unit-diagonal covariance ``Sigma`` and concentration ``K``."""

    m: int
    Sigma: np.ndarray
    K: np.ndarray
    alpha: float

    @classmethod
    def from_sigma(cls, Sigma, alpha: float = 0.0) -> "LatentGaussianSpec":
        Sigma = np.asarray(Sigma, dtype=float)
        _check_spd(Sigma)
        return cls(Sigma.shape[0], Sigma, np.linalg.inv(Sigma), alpha)


def _check_spd(S):
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("covariance must be a square matrix")
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise ComputationError("matrix is not positive definite") from exc


def _unit_diag(S):
    s = 1.0 / np.sqrt(np.diag(S))
    out = S * s[:, None] * s[None, :]
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def random_spd(m: int, alpha: float, seed=0, shift: float = DEFAULT_SHIFT, max_attempts: int = 10) -> LatentGaussianSpec:
    """Random unit-diagonal covariance ``(1 - alpha) I + alpha P``.

    ``R = Q diag(lam) Q^T`` with ``Q`` from the QR factorization of a standard
    normal matrix and ``lam ~ U[0.5, 1.5]``.  ``P`` is ``R + shift * 11^T``
    rescaled to unit diagonal.  The shift adds a common positive correlation
    of roughly ``shift / (1 + shift)``; ``shift=0`` gives ``P`` the bare
    rotated spectrum, whose correlations are small and of random sign.
    """
    if m < 1:
        raise ValidationError("m must be at least 1")
    if not 0.0 <= alpha < 1.0:
        raise ValidationError("alpha must lie in [0, 1)")
    if shift < 0:
        raise ValidationError("shift must be nonnegative")
    rng = _rng(seed)
    for _ in range(max_attempts):
        Q, Rq = np.linalg.qr(rng.standard_normal((m, m)))
        Q = Q * np.sign(np.where(np.diag(Rq) == 0, 1.0, np.diag(Rq)))
        lam = rng.uniform(0.5, 1.5, size=m)
        R = (Q * lam) @ Q.T + shift * np.ones((m, m))
        Sigma = (1.0 - alpha) * np.eye(m) + alpha * _unit_diag(R)
        Sigma = 0.5 * (Sigma + Sigma.T)
        try:
            np.linalg.cholesky(Sigma)
        except np.linalg.LinAlgError:
            continue
        return LatentGaussianSpec(m, Sigma, np.linalg.inv(Sigma), float(alpha))
    raise ComputationError("failed to draw a positive-definite matrix")


def _components(dep: DependencyGraph) -> list[list[int]]:
    adj = [[] for _ in range(dep.m)]
    for a, b in dep.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = np.zeros(dep.m, dtype=bool)
    comps = []
    for s in range(dep.m):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def missing_edge_residual(K: np.ndarray, dep: DependencyGraph) -> float:
    """Sum of |K[a, b]| over pairs a < b that are not edges of ``dep``."""
    mask = np.triu(np.ones(K.shape, dtype=bool), 1)
    for a, b in dep.edges:
        mask[a, b] = False
    return float(np.abs(K[mask]).sum())


def enforce_zeros(spec: LatentGaussianSpec, dep: DependencyGraph, tol: float = 1e-8, max_sweeps: int = 1000) -> LatentGaussianSpec:
    """Adjust ``Sigma`` so its inverse vanishes on every missing edge of ``dep``.

    Each update changes only ``Sigma[a, b]`` for one missing pair, setting it to
    the value implied by the conditional independence of a and b given the
    rest; this zeroes ``K[a, b]`` while keeping ``Sigma`` positive definite.
    Pairs are swept in lexicographic order until the summed residual is below
    ``tol``.  Covariances between different connected components of ``dep``
    are zero at the fixed point, so they are set directly and the sweeps run
    within each component.
    """
    if dep.m != spec.m:
        raise ValidationError(f"dependency graph has {dep.m} dyads but the Gaussian has dimension {spec.m}")
    _check_spd(spec.Sigma)
    Sigma = np.zeros_like(spec.Sigma)
    for comp in _components(dep):
        idx = np.array(comp)
        block = spec.Sigma[np.ix_(idx, idx)].copy()
        if len(comp) > 1:
            pos = {v: k for k, v in enumerate(comp)}
            missing = [
                (pos[a], pos[b])
                for ia, a in enumerate(comp)
                for b in comp[ia + 1 :]
                if not dep.has_edge(a, b)
            ]
            if missing:
                block = _sweep_block(block, missing, tol, max_sweeps)
        Sigma[np.ix_(idx, idx)] = block
    Sigma = _unit_diag(Sigma)
    _check_spd(Sigma)
    K = np.linalg.inv(Sigma)
    K = 0.5 * (K + K.T)
    return LatentGaussianSpec(spec.m, Sigma, K, spec.alpha)


def _sweep_block(S, missing, tol, max_sweeps):
    rows = np.array([a for a, _ in missing])
    cols = np.array([b for _, b in missing])
    for _ in range(max_sweeps):
        K = np.linalg.inv(S)
        if np.abs(K[rows, cols]).sum() < tol:
            return S
        for a, b in missing:
            e = [a, b]
            C = np.linalg.inv(K[np.ix_(e, e)])
            delta = -C[0, 1]
            if delta == 0.0:
                continue
            S[a, b] += delta
            S[b, a] += delta
            # rank-two update of K for Sigma + delta (e_a e_b^T + e_b e_a^T)
            U = K[:, e]
            inner = np.array([[0.0, 1.0 / delta], [1.0 / delta, 0.0]]) + K[np.ix_(e, e)]
            K = K - U @ np.linalg.solve(inner, U.T)
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise ComputationError("positive definiteness lost while enforcing zeros") from exc
    K = np.linalg.inv(S)
    if np.abs(K[rows, cols]).sum() < tol:
        return S
    raise ConvergenceError(f"zero constraints not met after {max_sweeps} sweeps")


def sample_gaussian_threshold(spec: LatentGaussianSpec, count: int, seed=0, n: int | None = None) -> list[Network]:
    """Draw latent vectors N(0, Sigma) and set dyads to 1 where the value is nonnegative."""
    n = _nodes_for(spec.m) if n is None else n
    if n_dyads(n) != spec.m:
        raise ValidationError(f"n={n} does not match dimension {spec.m}")
    try:
        L = np.linalg.cholesky(spec.Sigma)
    except np.linalg.LinAlgError as exc:
        raise ComputationError("covariance factorization failed") from exc
    rng = _rng(seed)
    Z = rng.standard_normal((count, spec.m)) @ L.T
    return [Network(n, row) for row in (Z >= 0).astype(np.uint8)]


# ----------------------------------------------------------------------
# simulation study


@dataclass(frozen=True)
class StudyConfig:
    """One or two arms of replicated LRT fits on thresholded Gaussian networks.

    ``alpha_low`` may be ``None`` for a single-arm study at ``alpha_high``.
    """

    n: int
    D: DependencyGraph
    replicates: int
    alpha_low: float | None = 0.1
    alpha_high: float = 0.9
    seed: int = 0
    shift: float = DEFAULT_SHIFT
    tol: float = 1e-8
    max_iter: int = 10000
    bound: float = 30.0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValidationError("replicates must be at least 1")
        if self.D.n != self.n:
            raise ValidationError("dependency graph does not match n")

    @property
    def arms(self) -> list[float]:
        return ([self.alpha_low] if self.alpha_low is not None else []) + [self.alpha_high]

    @classmethod
    def from_json(cls, obj: dict, base_dir: str | Path = ".") -> "StudyConfig":
        """Build from a JSON object.

        The dependency graph is given by ``"dep"`` (path to a dependency-graph
        file, relative to ``base_dir``), ``"cliques"`` (list of star-clique
        sizes, hubs 1, 2, ...) or ``"edges"`` (list of ``["i-j", "k-l"]``).
        """
        from .io import parse_dyad_label, read_dependency_graph

        try:
            n = int(obj["n"])
            if "dep" in obj:
                D = read_dependency_graph(Path(base_dir) / obj["dep"])
            elif "cliques" in obj:
                D = star_clique_dep(n, [int(c) for c in obj["cliques"]])
            elif "edges" in obj:
                D = DependencyGraph.from_dyad_pairs(
                    n, [(parse_dyad_label(a), parse_dyad_label(b)) for a, b in obj["edges"]]
                )
            else:
                D = DependencyGraph.empty(n)
            kw = {}
            for key in ("shift", "tol", "bound"):
                if key in obj:
                    kw[key] = float(obj[key])
            if "max_iter" in obj:
                kw["max_iter"] = int(obj["max_iter"])
            low = obj.get("alpha_low", 0.1)
            return cls(
                n=n,
                D=D,
                replicates=int(obj.get("replicates", 50)),
                alpha_low=None if low is None else float(low),
                alpha_high=float(obj.get("alpha_high", 0.9)),
                seed=int(obj.get("seed", 0)),
                **kw,
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"invalid study config: {exc}") from exc


@dataclass(frozen=True)
class StudyRecord:
    alpha: float
    replicate: int
    report: LRTReport | None
    error: str | None = None

    @property
    def S(self) -> float:
        return self.report.S if self.report is not None else math.nan

    @property
    def discarded(self) -> bool:
        return self.report is None or self.report.discarded


@dataclass
class StudyResult:
    """Per-arm records, each arm sorted ascending by S (failed replicates last)."""

    config: StudyConfig
    arms: dict = field(default_factory=dict)

    def records(self, alpha: float) -> list[StudyRecord]:
        return self.arms[alpha]

    def discard_count(self, alpha: float) -> int:
        return sum(r.discarded for r in self.arms[alpha])

    def S_values(self, alpha: float, include_discarded: bool = True) -> np.ndarray:
        vals = [r.S for r in self.arms[alpha] if include_discarded or not r.discarded]
        return np.array([v for v in vals if not math.isnan(v)])

    def median_S(self, alpha: float, include_discarded: bool = True) -> float:
        vals = self.S_values(alpha, include_discarded)
        return float(np.median(vals)) if vals.size else math.nan


def _replicate(config: StudyConfig, catalog, arm: int, alpha: float, rep: int, opts: FitOptions) -> StudyRecord:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, arm, rep]))
    try:
        spec = enforce_zeros(random_spd(catalog.m, alpha, rng, shift=config.shift), config.D)
        x = sample_gaussian_threshold(spec, 1, rng, n=config.n)[0]
        return StudyRecord(alpha, rep, lrt(x, catalog, opts=opts, allow_extended=True))
    except (HiernetError, ValueError, np.linalg.LinAlgError) as exc:
        return StudyRecord(alpha, rep, None, f"{type(exc).__name__}: {exc}")


def run_study(config: StudyConfig, workers: int | None = None) -> StudyResult:
    """Run every replicate of every arm.

    Replicate ``k`` of arm ``a`` draws from its own stream seeded by
    ``(seed, a, k)``, so the output does not depend on the worker count.
    Fits whose MLE does not exist are kept with S evaluated at the
    likelihood supremum and flagged ``discarded``.
    """
    catalog = enumerate_cliques(config.D)
    her_family(catalog)  # build the shared core table once
    opts = FitOptions(tol=config.tol, max_iter=config.max_iter, bound=config.bound)
    workers = workers or thread_count()
    jobs = [(a, alpha, k) for a, alpha in enumerate(config.arms) for k in range(config.replicates)]

    def run(job):
        return _replicate(config, catalog, job[0], job[1], job[2], opts)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(run, jobs))
    else:
        recs = [run(j) for j in jobs]
    result = StudyResult(config)
    for alpha in config.arms:
        arm = [r for r in recs if r.alpha == alpha]
        arm.sort(key=lambda r: (math.isnan(r.S), r.S, r.replicate))
        result.arms[alpha] = arm
    return result


CSV_COLUMNS = ["alpha", "replicate", "S", "loglik_her", "loglik_er", "df", "status", "discarded"]


def study_csv(result: StudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for alpha, recs in result.arms.items():
        for r in recs:
            if r.report is None:
                w.writerow([repr(alpha), r.replicate, "nan", "nan", "nan", "", f"error: {r.error}", 1])
            else:
                rep = r.report
                w.writerow([
                    repr(alpha), r.replicate, repr(rep.S), repr(rep.loglik_her), repr(rep.loglik_er),
                    rep.df, rep.her_status, int(rep.discarded),
                ])
    return buf.getvalue()


def write_study_csv(result: StudyResult, path: str | Path) -> None:
    """Write the study table atomically (temporary file, then rename)."""
    atomic_write(path, study_csv(result))


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_to_json(config: StudyConfig) -> str:
    from .graphs import dyad_label

    return json.dumps({
        "n": config.n,
        "edges": [[dyad_label(a, config.n), dyad_label(b, config.n)] for a, b in config.D.sorted_edges()],
        "replicates": config.replicates,
        "alpha_low": config.alpha_low,
        "alpha_high": config.alpha_high,
        "seed": config.seed,
        "shift": config.shift,
    })
