"""Acceptance criteria 1-12.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary and
printed directly when run as a script) and then asserts the criterion.
"""

import itertools
import math
import sys
import time

import numpy as np
import pytest
from scipy import stats

from hiernet.estimation import FitStatus, backward_select, fit_er, grad_hbeta, grad_her, lrt, loglik_hbeta, loglik_her
from hiernet.graphs import (
    DependencyGraph,
    Network,
    build_line_graph,
    dyad_pair,
    enumerate_cliques,
    permute_network,
    star_clique_dep,
)
from hiernet.p1 import P1Params, p1_all_states, p1_log_unnorm_many, p1_psi_enum
from hiernet.partition import HBetaParams, HERParams, psi_hbeta, psi_hbeta_bruteforce, psi_her, psi_her_bruteforce
from hiernet.simulate import (
    StudyConfig,
    enforce_zeros,
    exact_her_probabilities,
    missing_edge_residual,
    random_spd,
    run_study,
    sample_exact_her,
    sample_gaussian_threshold,
)
from hiernet.suffstats import her_stats

from oracles import all_networks, path3_dep, path3_psi, p1_dyadic_psi, random_markov_dep

RESULTS: dict[int, str] = {}


def record(k, ok, detail, t0):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.2f} s)"
    RESULTS[k] = line
    print(line)
    return ok


def rel_err(a, b):
    return abs(a - b) / abs(b)


# ----------------------------------------------------------------------


def test_c01_worked_example():
    t0 = time.perf_counter()
    cat = enumerate_cliques(path3_dep())
    grid = np.linspace(-2.0, 2.0, 5)
    worst = max(
        rel_err(psi_her(HERParams([q, q2]), None, cat).value, path3_psi(q, q2))
        for q, q2 in itertools.product(grid, grid)
    )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    assert record(1, ok, f"25 grid points, max rel err {worst:.2e}", t0)


def _random_dep(rng):
    n = int(rng.choice([3, 4, 5]))
    return random_markov_dep(n, rng, float(rng.uniform(0.05, 1.0 if n < 5 else 0.6)))


def test_c02_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_psi = worst_mean = 0.0
    for _ in range(200):
        dep = _random_dep(rng)
        assert dep.m <= 12
        cat = enumerate_cliques(dep)
        pairs = [
            (HERParams(rng.uniform(-3, 3, cat.d), rng.uniform(-3, 3)), psi_her, psi_her_bruteforce),
            (HBetaParams(rng.uniform(-3, 3, (cat.n, cat.d)), rng.uniform(-3, 3, cat.n)), psi_hbeta, psi_hbeta_bruteforce),
        ]
        for p, fast, slow in pairs:
            a, b = fast(p, None, cat), slow(p, cat)
            worst_psi = max(worst_psi, rel_err(a.value, b.value))
            nz = np.abs(b.expectations) > 0
            assert np.array_equal(a.expectations[~nz], b.expectations[~nz])
            if nz.any():
                worst_mean = max(worst_mean, float(np.max(np.abs(a.expectations - b.expectations)[nz] / np.abs(b.expectations[nz]))))
    elapsed = time.perf_counter() - t0
    ok = worst_psi <= 1e-10 and worst_mean <= 1e-8 and elapsed < 120
    assert record(2, ok, f"200 graphs x 2 models, psi rel {worst_psi:.1e}, mean rel {worst_mean:.1e}", t0)


def test_c03_gradients():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    h = 1e-5
    worst = 0.0
    for _ in range(50):
        dep = _random_dep(rng)
        cat = enumerate_cliques(dep)
        x = Network(dep.n, rng.integers(0, 2, dep.m))
        th = rng.uniform(-2, 2, cat.d + 1)
        g = grad_her(x, HERParams.from_vector(th), cat)
        for k in range(th.size):
            e = np.zeros_like(th)
            e[k] = h
            fd = (loglik_her(x, HERParams.from_vector(th + e), cat) - loglik_her(x, HERParams.from_vector(th - e), cat)) / (2 * h)
            worst = max(worst, abs(fd - g[k]) / max(1.0, abs(g[k])))
        vb = rng.uniform(-1.5, 1.5, cat.n * (cat.d + 1))
        gb = grad_hbeta(x, HBetaParams.from_vector(vb, cat.n, cat.d), cat)
        for k in range(vb.size):
            e = np.zeros_like(vb)
            e[k] = h
            up = loglik_hbeta(x, HBetaParams.from_vector(vb + e, cat.n, cat.d), cat)
            dn = loglik_hbeta(x, HBetaParams.from_vector(vb - e, cat.n, cat.d), cat)
            worst = max(worst, abs((up - dn) / (2 * h) - gb[k]) / max(1.0, abs(gb[k])))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60
    assert record(3, ok, f"50 instances, max rel err {worst:.1e}", t0)


def _matching_dep(n, rng):
    """Random set of disjoint adjacent dyad pairs: many size-2 stars, no larger cliques."""
    pairs = itertools.combinations(range(n * (n - 1) // 2), 2)
    adjacent = [(a, b) for a, b in pairs if set(dyad_pair(a, n)) & set(dyad_pair(b, n))]
    used, edges = set(), set()
    for k in rng.permutation(len(adjacent)):
        a, b = adjacent[k]
        if a not in used and b not in used:
            edges.add((a, b))
            used |= {a, b}
    return DependencyGraph(n, frozenset(edges))


def test_c04_nesting_and_positivity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_nest, min_S, kept, tries = 0.0, math.inf, 0, 0
    while kept < 100:
        tries += 1
        assert tries < 2000
        dep = _matching_dep(6, rng)
        cat = enumerate_cliques(dep)
        x = sample_exact_her(HERParams(rng.uniform(-0.5, 0.5, cat.d)), cat, count=1, seed=rng)[0]
        if x.edge_count() in (0, dep.m):
            continue
        rep = lrt(x, cat, allow_extended=True)
        if rep.her_status != FitStatus.CONVERGED.value:
            continue
        kept += 1
        er = fit_er(x)
        ll = loglik_her(x, HERParams(np.r_[er.q, np.zeros(cat.d - 1)]), cat)
        worst_nest = max(worst_nest, abs(ll - er.loglik) / max(1.0, abs(er.loglik)))
        min_S = min(min_S, rep.S)
    ok = worst_nest <= 1e-12 and min_S >= -1e-8
    assert record(4, ok, f"100 interior networks ({tries} drawn), nesting err {worst_nest:.1e}, min S {min_S:.3g}", t0)


def test_c05_correlation_ordering():
    t0 = time.perf_counter()
    cfg = StudyConfig(n=20, D=star_clique_dep(20, [10]), replicates=50, alpha_low=0.1, alpha_high=0.9, seed=0)
    res = run_study(cfg)
    lo, hi = res.median_S(0.1), res.median_S(0.9)
    elapsed = time.perf_counter() - t0
    ok = hi > lo and elapsed < 600
    detail = (
        f"median S low {lo:.3f} < high {hi:.3f} (boundary replicates: {res.discard_count(0.1)} low, "
        f"{res.discard_count(0.9)} high, of 50; medians over all replicates)"
    )
    assert record(5, ok, detail, t0)


def _high_arm(n, sizes, seed):
    cfg = StudyConfig(n=n, D=star_clique_dep(n, sizes), replicates=50, alpha_low=None, seed=seed)
    return run_study(cfg).median_S(cfg.alpha_high)


def test_c06_clique_size_ordering():
    t0 = time.perf_counter()
    med = [_high_arm(16, [c], 0) for c in (3, 5, 8)]
    elapsed = time.perf_counter() - t0
    ok = all(b >= a for a, b in zip(med, med[1:])) and elapsed < 600
    assert record(6, ok, "median S by clique size 3/5/8: " + " <= ".join(f"{m:.3f}" for m in med), t0)


def test_c07_network_size_ordering():
    t0 = time.perf_counter()
    med = [_high_arm(n, [n // 2], 0) for n in (12, 16, 20)]
    elapsed = time.perf_counter() - t0
    ok = all(b > a for a, b in zip(med, med[1:])) and elapsed < 900
    assert record(7, ok, "median S for n=12/16/20: " + " < ".join(f"{m:.3f}" for m in med), t0)


def test_c08_simulator_fidelity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_res, worst_marg, pd_ok = 0.0, 0.0, True
    for k in range(50):
        n = int(rng.choice([4, 5, 6]))
        dep = random_markov_dep(n, rng, float(rng.uniform(0.05, 0.6)))
        alpha = float(rng.uniform(0.0, 0.95))
        spec = enforce_zeros(random_spd(dep.m, alpha, seed=rng), dep, tol=1e-8, max_sweeps=1000)
        worst_res = max(worst_res, missing_edge_residual(np.linalg.inv(spec.Sigma), dep))
        pd_ok &= bool(np.linalg.eigvalsh(spec.Sigma).min() > 0)
        X = np.array([x.dyads for x in sample_gaussian_threshold(spec, 10_000, seed=rng)])
        worst_marg = max(worst_marg, float(np.max(np.abs(X.mean(axis=0) - 0.5))))
    ok = worst_res < 1e-8 and pd_ok and worst_marg <= 0.02
    assert record(8, ok, f"50 instances, max residual {worst_res:.1e}, max |marginal - 0.5| {worst_marg:.4f}", t0)


def test_c09_exact_sampler():
    t0 = time.perf_counter()
    cat = enumerate_cliques(path3_dep())
    p = HERParams([0.0, 2.0])
    probs = exact_her_probabilities(p, cat)
    X = np.array([x.dyads for x in sample_exact_her(p, cat, count=100_000, seed=9)], dtype=np.int64)
    counts = np.bincount(X @ (1 << np.arange(3)), minlength=8)
    pval = stats.chisquare(counts, 100_000 * probs).pvalue
    assert record(9, pval > 0.001, f"chi-square p = {pval:.3f} on 10^5 draws", t0)


def test_c10_p1():
    t0 = time.perf_counter()
    cat = enumerate_cliques(path3_dep())
    S = p1_all_states(3)
    rng = np.random.default_rng(10)
    worst_sum = worst_dyadic = worst_ci = 0.0
    for _ in range(10):
        p = P1Params.random(3, cat.d, rng, scale=1.5)
        P = np.exp(p1_log_unnorm_many(S, p, cat) - p1_psi_enum(p, cat))
        worst_sum = max(worst_sum, abs(P.sum() - 1))
        T = P.reshape(4, 4, 4)  # [s23, s13, s12]
        pred = np.einsum("cb,ba->cba", T.sum(axis=2), T.sum(axis=0)) / T.sum(axis=(0, 2))[None, :, None]
        worst_ci = max(worst_ci, float(np.max(np.abs(T - pred))))
        q = p.dyadic()
        worst_dyadic = max(worst_dyadic, abs(p1_psi_enum(q, cat) - p1_dyadic_psi(q.alpha[:, 0], q.beta[:, 0], 3)))
        D = np.exp(p1_log_unnorm_many(S, q, cat) - p1_psi_enum(q, cat)).reshape(4, 4, 4)
        prod = np.einsum("c,b,a->cba", D.sum(axis=(1, 2)), D.sum(axis=(0, 2)), D.sum(axis=(0, 1)))
        worst_dyadic = max(worst_dyadic, float(np.max(np.abs(D - prod))))
    ok = worst_sum <= 1e-12 and worst_dyadic <= 1e-12 and worst_ci <= 1e-10
    assert record(10, ok, f"sum err {worst_sum:.1e}, dyadic err {worst_dyadic:.1e}, CI err {worst_ci:.1e}", t0)


def test_c11_exchangeability():
    t0 = time.perf_counter()
    perms = list(itertools.permutations(range(1, 5)))
    k4 = enumerate_cliques(build_line_graph(4))
    invariant = all(
        np.array_equal(her_stats(permute_network(Network(4, x), perm), k4).vector(), her_stats(Network(4, x), k4).vector())
        for x in all_networks(6)
        for perm in perms
    )
    path3 = enumerate_cliques(path3_dep())
    witness = next(
        (
            (Network(3, x), perm)
            for x in all_networks(3)
            for perm in itertools.permutations(range(1, 4))
            if not np.array_equal(her_stats(permute_network(Network(3, x), perm), path3).vector(), her_stats(Network(3, x), path3).vector())
        ),
        None,
    )
    detail = f"K4 line graph invariant under {len(perms)} permutations: {invariant}; path graph counterexample: "
    detail += "none" if witness is None else f"edges {witness[0].edges()} under {witness[1]}"
    assert record(11, invariant and witness is not None, detail, t0)


def test_c12_backward_selection_null():
    t0 = time.perf_counter()
    D0 = path3_dep()
    cat0 = enumerate_cliques(DependencyGraph.empty(3))
    empty = 0
    for rep in range(100):
        xs = sample_exact_her(HERParams([0.0]), cat0, count=300, seed=np.random.SeedSequence([12, rep]))
        empty += not backward_select(xs, D0, alpha=0.05).edges
    assert record(12, empty >= 80, f"empty graph returned in {empty}/100 replicates (300 networks each)", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
