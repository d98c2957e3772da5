"""Likelihoods, maximum-likelihood fits and likelihood-ratio comparisons.

The log-likelihood of an iid sample x_1..x_N is

    l(theta) = <theta, sum_k T(x_k)> - N psi(theta),

concave in theta.  Fits ascend it from the zero vector with an Armijo
backtracking line search.  Before ascending, the mean observed statistic is
located on the convex support of the model statistic; if it lies on a proper
face the MLE does not exist, and the fit instead maximizes the likelihood of
the family conditioned on that face, which attains the supremum of ``l``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import chi2

from .errors import NonexistentMLEError, ValidationError
from .family import StatFamily
from .graphs import CliqueCatalog, CoreDecomposition, DependencyGraph, enumerate_cliques
from .partition import (
    HBetaParams,
    HERParams,
    hbeta_active,
    hbeta_family,
    _hbeta_theta,
    _her_theta,
    her_active,
    her_family,
)
from .suffstats import as_matrix, hbeta_stats_matrix, her_stats_matrix

__all__ = [
    "FitStatus",
    "FitOptions",
    "FitResult",
    "ERFit",
    "LRTReport",
    "loglik_her",
    "grad_her",
    "loglik_hbeta",
    "grad_hbeta",
    "fit_her",
    "fit_hbeta",
    "fit_er",
    "her_param_count",
    "lrt",
    "backward_select",
]


class FitStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    SUSPECT_NONEXISTENT = "SuspectNonexistent"


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    ``method`` is ``"newton"`` (Fisher-scoring direction, the default) or
    ``"gradient"`` (steepest ascent); both use the same Armijo backtracking.
    """

    tol: float = 1e-8
    max_iter: int = 10000
    bound: float = 30.0
    method: str = "newton"
    check_existence: bool = True
    armijo: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0


@dataclass
class FitResult:
    """Outcome of a maximum-likelihood fit.

    When ``extended`` is true the MLE does not exist; ``loglik`` is then the
    supremum of the log-likelihood and ``params`` the fit of the model
    conditioned on the face of the support holding the data.
    """

    params: HERParams | HBetaParams
    loglik: float
    grad_inf_norm: float
    iterations: int
    status: FitStatus
    extended: bool = False
    n_obs: int = 1
    history: list = field(default_factory=list, repr=False)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "loglik": self.loglik,
            "grad_inf_norm": self.grad_inf_norm,
            "iterations": self.iterations,
            "status": self.status.value,
            "extended": self.extended,
            "n_obs": self.n_obs,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ERFit:
    q: float
    p: float
    loglik: float

    def to_json(self) -> dict:
        return {"params": {"q": [self.q], "t": 0.0}, "p": self.p, "loglik": self.loglik, "status": "Converged"}


@dataclass(frozen=True)
class LRTReport:
    """S = 2 l_HER - 2 l_ER at the maximized likelihoods."""

    S: float
    loglik_her: float
    loglik_er: float
    df: int
    p_value: float
    her_status: str = FitStatus.CONVERGED.value
    discarded: bool = False

    def to_json(self) -> dict:
        return {
            "S": self.S,
            "loglik_her": self.loglik_her,
            "loglik_er": self.loglik_er,
            "df": self.df,
            "p_value": self.p_value,
            "her_status": self.her_status,
            "discarded": self.discarded,
        }


# ----------------------------------------------------------------------
# likelihood pieces


def _sample(x, n):
    X = as_matrix(x, n)
    return X, X.shape[0]


def _her_total(X, catalog):
    return her_stats_matrix(X, catalog).sum(axis=0).astype(float)


def _hbeta_total(X, catalog):
    ds, dt = hbeta_stats_matrix(X, catalog)
    return np.concatenate([ds.sum(axis=0).ravel(), dt.sum(axis=0)]).astype(float)


def _loglik(fam: StatFamily, T, N, theta):
    return float(theta @ T - N * fam.log_partition(theta))


def _grad(fam: StatFamily, T, N, theta):
    _, mean = fam.moments(theta)
    return T - N * mean


def loglik_her(x, params: HERParams, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None) -> float:
    """Log-likelihood of one network or of an iid sample of networks."""
    X, N = _sample(x, catalog.n)
    fam, _ = her_family(catalog, decomp)
    return _loglik(fam, _her_total(X, catalog), N, _her_theta(params, catalog))


def grad_her(x, params: HERParams, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None) -> np.ndarray:
    """Score vector (q1..qd, t): observed statistic minus its expectation."""
    X, N = _sample(x, catalog.n)
    fam, _ = her_family(catalog, decomp)
    return _grad(fam, _her_total(X, catalog), N, _her_theta(params, catalog))


def loglik_hbeta(x, params: HBetaParams, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None) -> float:
    X, N = _sample(x, catalog.n)
    fam, _ = hbeta_family(catalog, decomp)
    return _loglik(fam, _hbeta_total(X, catalog), N, _hbeta_theta(params, catalog))


def grad_hbeta(x, params: HBetaParams, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None) -> np.ndarray:
    """Score vector in the layout of ``HBetaParams.vector()``."""
    X, N = _sample(x, catalog.n)
    fam, _ = hbeta_family(catalog, decomp)
    return _grad(fam, _hbeta_total(X, catalog), N, _hbeta_theta(params, catalog))


# ----------------------------------------------------------------------
# optimizer

_NOISE = 64 * np.finfo(float).eps


@dataclass
class _Ascent:
    theta: np.ndarray
    loglik: float
    gnorm: float
    iterations: int
    status: FitStatus
    history: list


def _ascend(fam: StatFamily, T, N, active, opts: FitOptions, bound=None) -> _Ascent:
    bound = opts.bound if bound is None else bound
    theta = np.zeros(fam.dim)
    need_cov = opts.method == "newton"
    if opts.method not in ("newton", "gradient"):
        raise ValidationError(f"unknown optimizer method {opts.method!r}")

    def evaluate(th):
        out = fam.moments(th, order=2 if need_cov else 1)
        psi, mean = out[0], out[1]
        cov = out[2] if need_cov else None
        return float(th @ T - N * psi), (T - N * mean)[active], cov

    ll, g, cov = evaluate(theta)
    history = [ll]
    status = FitStatus.MAX_ITERATIONS
    it = 0
    while True:
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= opts.tol:
            status = FitStatus.CONVERGED
            break
        if np.max(np.abs(theta)) > bound:
            status = FitStatus.SUSPECT_NONEXISTENT
            break
        if it >= opts.max_iter:
            break
        direction = g
        if need_cov:
            H = N * cov[np.ix_(active, active)]
            step = np.linalg.lstsq(H, g, rcond=1e-12)[0]
            if np.all(np.isfinite(step)) and step @ g > 0:
                direction = step
        slope = float(direction @ g)
        s = opts.step0
        accepted = False
        while s > 1e-16:
            trial = theta.copy()
            trial[active] += s * direction
            ll_t, g_t, cov_t = evaluate(trial)
            if np.isfinite(ll_t):
                if ll_t >= ll + opts.armijo * s * slope:
                    accepted = True
                    break
                # below rounding resolution of l, judge progress by the score
                if abs(ll_t - ll) <= _NOISE * max(1.0, abs(ll)) and np.max(np.abs(g_t)) < gnorm:
                    accepted = True
                    break
            s *= opts.shrink
        it += 1
        if not accepted:
            break
        theta, ll, g, cov = trial, ll_t, g_t, cov_t
        history.append(ll)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    return _Ascent(theta, ll, gnorm, it, status, history)


def _fit_family(fam: StatFamily, T, N, active, opts: FitOptions):
    """Returns (ascent, extended flag)."""
    if opts.check_existence and fam.materialized:
        face = fam.face(T / N)
        if not face.is_full:
            sub = fam.restrict(face)
            res = _ascend(sub, T, N, active, opts, bound=math.inf)
            res.status = FitStatus.SUSPECT_NONEXISTENT
            return res, True
    res = _ascend(fam, T, N, active, opts)
    return res, False


def fit_her(x, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None, opts: FitOptions | None = None) -> FitResult:
    """Maximum-likelihood fit of the hierarchical ER model to a network (or iid sample)."""
    opts = opts or FitOptions()
    X, N = _sample(x, catalog.n)
    fam, _ = her_family(catalog, decomp)
    res, ext = _fit_family(fam, _her_total(X, catalog), N, her_active(catalog), opts)
    return FitResult(
        HERParams.from_vector(res.theta), res.loglik, res.gnorm, res.iterations,
        res.status, ext, N, res.history,
    )


def fit_hbeta(x, catalog: CliqueCatalog, decomp: CoreDecomposition | None = None, opts: FitOptions | None = None) -> FitResult:
    """Maximum-likelihood fit of the hierarchical beta model.

    Warns when the statistics are linearly dependent on the support, in which
    case the parameters are identified only up to that dependence.
    """
    opts = opts or FitOptions()
    X, N = _sample(x, catalog.n)
    fam, _ = hbeta_family(catalog, decomp)
    active = hbeta_active(catalog)
    notes = []
    if fam.materialized and fam.support_rank() < int(active.sum()):
        msg = (
            f"hierarchical beta statistics are rank-deficient: support rank "
            f"{fam.support_rank()} < {int(active.sum())} free parameters"
        )
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    res, ext = _fit_family(fam, _hbeta_total(X, catalog), N, active, opts)
    return FitResult(
        HBetaParams.from_vector(res.theta, catalog.n, catalog.d), res.loglik, res.gnorm,
        res.iterations, res.status, ext, N, res.history, notes,
    )


def fit_er(x) -> ERFit:
    """Closed-form Erdos-Renyi MLE; raises :class:`NonexistentMLEError` on 0 or all edges."""
    X = as_matrix(x)
    total = X.size
    e = int(X.astype(np.int64).sum())
    if e == 0 or e == total:
        raise NonexistentMLEError(f"Erdos-Renyi MLE does not exist: {e} of {total} dyads present")
    p = e / total
    return ERFit(math.log(p / (1 - p)), p, e * math.log(p) + (total - e) * math.log1p(-p))


def her_param_count(catalog: CliqueCatalog) -> int:
    return int(her_active(catalog).sum())


def _as_catalog(dep) -> CliqueCatalog:
    if isinstance(dep, CliqueCatalog):
        return dep
    if isinstance(dep, DependencyGraph):
        return enumerate_cliques(dep)
    raise ValidationError("expected a DependencyGraph or CliqueCatalog")


def lrt(x, dep, opts: FitOptions | None = None, allow_extended: bool = False) -> LRTReport:
    """Likelihood-ratio statistic of hierarchical ER against plain ER.

    With ``allow_extended`` a nonexistent MLE does not raise: the supremum of
    the likelihood is used and the report is flagged ``discarded``.
    """
    catalog = _as_catalog(dep)
    fit = fit_her(x, catalog, opts=opts)
    discarded = fit.status is FitStatus.SUSPECT_NONEXISTENT
    if discarded and not allow_extended:
        raise NonexistentMLEError("hierarchical ER MLE does not exist for this network")
    try:
        l_er = fit_er(x).loglik
    except NonexistentMLEError:
        if not allow_extended:
            raise
        l_er = 0.0
        discarded = True
    df = her_param_count(catalog) - 1
    S = 2.0 * fit.loglik - 2.0 * l_er
    p_value = float(chi2.sf(max(S, 0.0), df)) if df > 0 else 1.0
    return LRTReport(S, fit.loglik, l_er, df, p_value, fit.status.value, discarded)


def backward_select(x, D0: DependencyGraph, alpha: float = 0.05, opts: FitOptions | None = None, trace: list | None = None) -> DependencyGraph:
    """Backward elimination of dependency-graph edges by likelihood-ratio tests.

    Edges of ``D0`` are visited in decreasing lexicographic order.  Each is
    dropped from the currently accepted graph unless the larger model fits
    significantly better (chi-square test at level ``alpha``).  Removals that
    do not change the parameter count are accepted without a test.
    """
    current = D0
    cat_cur = enumerate_cliques(current)
    fit_cur = None
    for a, b in sorted(D0.edges, reverse=True):
        cand = current.without_edge(a, b)
        cat_cand = enumerate_cliques(cand)
        df = her_param_count(cat_cur) - her_param_count(cat_cand)
        if df == 0:
            step = {"edge": (a, b), "df": 0, "removed": True}
        else:
            if fit_cur is None:
                fit_cur = _checked_fit(x, cat_cur, current, opts)
            fit_cand = _checked_fit(x, cat_cand, cand, opts)
            S = 2.0 * (fit_cur.loglik - fit_cand.loglik)
            p_value = float(chi2.sf(max(S, 0.0), df))
            removed = p_value >= alpha
            step = {"edge": (a, b), "df": df, "S": S, "p_value": p_value, "removed": removed}
        if trace is not None:
            trace.append(step)
        if step["removed"]:
            current, cat_cur = cand, cat_cand
            fit_cur = None if df == 0 else fit_cand
    return current


def _checked_fit(x, catalog, dep, opts):
    from .graphs import dyad_label

    fit = fit_her(x, catalog, opts=opts)
    if fit.status is FitStatus.SUSPECT_NONEXISTENT:
        edges = ", ".join(f"{dyad_label(a, dep.n)}~{dyad_label(b, dep.n)}" for a, b in dep.sorted_edges())
        raise NonexistentMLEError(f"MLE does not exist for dependency graph {{{edges}}}")
    return fit
