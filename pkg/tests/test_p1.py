import itertools
import math

import numpy as np
import pytest

from hiernet.errors import ValidationError
from hiernet.graphs import DependencyGraph, build_line_graph, dyad_index, enumerate_cliques
from hiernet.p1 import (
    DirectedNetwork,
    P1Params,
    format_directed_network,
    p1_all_states,
    p1_log_unnorm,
    p1_log_unnorm_many,
    p1_prob,
    p1_psi_enum,
    parse_directed_network,
)

from oracles import p1_dyadic_psi, random_markov_dep


def adjacency(states, n):
    Y = np.zeros((n + 1, n + 1), dtype=int)
    for i, j in itertools.combinations(range(1, n + 1), 2):
        s = int(states[dyad_index(i, j, n)])
        Y[i, j] = s & 1
        Y[j, i] = s >> 1
    return Y


def naive_p1(states, p, cat):
    """Clique terms evaluated from the adjacency matrix."""
    n = cat.n
    Y = adjacency(states, n)
    al, be = p.alpha, p.beta
    total = 0.0
    for i, j in itertools.combinations(range(1, n + 1), 2):
        total += (al[i - 1, 0] + be[j - 1, 0]) * Y[i, j] + (al[j - 1, 0] + be[i - 1, 0]) * Y[j, i]
    for c in cat.higher():
        pairs = [tuple(sorted(pair_of(v, n))) for v in c.members]
        if c.kind == "star":
            h = c.hub
            others = [a if b == h else b for a, b in pairs]
            total += be[h - 1, c.size - 1] * all(Y[h, o] for o in others)
            total += al[h - 1, c.size - 1] * all(Y[o, h] for o in others)
        else:
            i, j, k = sorted({v for pr in pairs for v in pr})
            I, J, K = i - 1, j - 1, k - 1
            at, bt, tau = p.alpha_t, p.beta_t, p.tau
            total += (bt[J] + at[K]) * Y[i, j] * Y[k, j] * Y[k, i]
            total += (bt[K] + at[I]) * Y[i, j] * Y[j, k] * Y[i, k]
            total += (bt[J] + at[I]) * Y[i, j] * Y[k, j] * Y[i, k]
            total += (tau[I] + at[J]) * Y[j, i] * Y[j, k] * Y[k, i]
            total += (bt[K] + at[J]) * Y[j, i] * Y[j, k] * Y[i, k]
    return total


def pair_of(k, n):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    return pairs[k]


class TestLogUnnorm:
    def test_all_zero_states(self, path3_catalog, rng):
        p = P1Params.random(3, 2, rng)
        assert p1_log_unnorm(DirectedNetwork(3, [0, 0, 0]), p, path3_catalog) == 0.0

    def test_zero_params(self, path3_catalog):
        S = p1_all_states(3)
        assert not p1_log_unnorm_many(S, P1Params.zeros(3, 2), path3_catalog).any()

    def test_path3_hand_value(self, path3_catalog):
        alpha = np.array([[0.1, 0.2], [0.3, 0.0], [-0.4, 0.6]])
        beta = np.array([[0.5, 0.7], [-0.2, 0.0], [0.9, -1.1]])
        p = P1Params(alpha, beta, np.zeros(3), np.zeros(3), np.zeros(3))
        x = DirectedNetwork.from_labels(3, ["11", "11", "00"])
        a1, a2, a3 = alpha[:, 0]
        b1, b2, b3 = beta[:, 0]
        ref = (a1 + b2) + (a2 + b1) + (a1 + b3) + (a3 + b1) + beta[0, 1] + alpha[0, 1]
        assert p1_log_unnorm(x, p, path3_catalog) == pytest.approx(ref, abs=1e-14)

    def test_star_needs_common_orientation(self, path3_catalog):
        p = P1Params(np.zeros((3, 2)), np.array([[0, 1.0], [0, 0], [0, 0]]), np.zeros(3), np.zeros(3), np.zeros(3))
        # 1 -> 2 and 3 -> 1: mixed orientation at hub 1
        assert p1_log_unnorm(DirectedNetwork.from_labels(3, ["10", "01", "00"]), p, path3_catalog) == 0.0
        assert p1_log_unnorm(DirectedNetwork.from_labels(3, ["10", "10", "00"]), p, path3_catalog) == 1.0

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_adjacency_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = 3 if seed < 3 else 4
        dep = build_line_graph(n) if seed % 3 == 0 else random_markov_dep(n, rng, 0.7)
        cat = enumerate_cliques(dep)
        p = P1Params.random(n, cat.d, rng)
        S = p1_all_states(n)[rng.choice(4 ** cat.m, 200)]
        got = p1_log_unnorm_many(S, p, cat)
        ref = [naive_p1(s, p, cat) for s in S]
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_shape_mismatch(self, path3_catalog):
        with pytest.raises(ValidationError):
            p1_log_unnorm(DirectedNetwork(3, [0, 0, 0]), P1Params.zeros(3, 3), path3_catalog)
        with pytest.raises(ValidationError):
            p1_log_unnorm(DirectedNetwork(4, [0] * 6), P1Params.zeros(3, 2), path3_catalog)


class TestNormalization:
    def test_uniform(self, path3_catalog):
        assert p1_psi_enum(P1Params.zeros(3, 2), path3_catalog) == pytest.approx(3 * math.log(4), rel=1e-14)
        x = DirectedNetwork.from_labels(3, ["01", "11", "10"])
        assert p1_prob(x, P1Params.zeros(3, 2), path3_catalog) == pytest.approx(1 / 64, rel=1e-12)

    @pytest.mark.parametrize("n", [3, 4])
    def test_dyadic_independence(self, n, rng):
        cat = enumerate_cliques(build_line_graph(n))
        p = P1Params.random(n, cat.d, rng).dyadic()
        ref = p1_dyadic_psi(p.alpha[:, 0], p.beta[:, 0], n)
        assert p1_psi_enum(p, cat) == pytest.approx(ref, rel=1e-12)

    def test_dyadic_factorization(self, path3_catalog, rng):
        p = P1Params.random(3, 2, rng).dyadic()
        S = p1_all_states(3)
        P = np.exp(p1_log_unnorm_many(S, p, path3_catalog) - p1_psi_enum(p, path3_catalog)).reshape(4, 4, 4)
        # reshape is [s23, s13, s12] since dyad 0 is the least significant digit
        m0, m1, m2 = P.sum(axis=(0, 1)), P.sum(axis=(0, 2)), P.sum(axis=(1, 2))
        np.testing.assert_allclose(P, np.einsum("c,b,a->cba", m2, m1, m0), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        cat = enumerate_cliques(random_markov_dep(4, rng, 0.6))
        p = P1Params.random(4, cat.d, rng)
        lw = p1_log_unnorm_many(p1_all_states(4), p, cat) - p1_psi_enum(p, cat)
        assert np.exp(lw).sum() == pytest.approx(1.0, abs=1e-12)

    def test_too_large(self):
        cat = enumerate_cliques(DependencyGraph.empty(5))
        with pytest.raises(ValidationError):
            p1_psi_enum(P1Params.zeros(5, 1), cat)


class TestMarkov:
    @pytest.mark.parametrize("draw", range(10))
    def test_path3_conditional_independence(self, path3_catalog, draw):
        rng = np.random.default_rng(draw)
        p = P1Params.random(3, 2, rng, scale=1.5)
        P = np.exp(p1_log_unnorm_many(p1_all_states(3), p, path3_catalog) - p1_psi_enum(p, path3_catalog))
        P = P.reshape(4, 4, 4)  # [s23, s13, s12]
        mid = P.sum(axis=(0, 2))
        left = P.sum(axis=0)  # [s13, s12]
        right = P.sum(axis=2)  # [s23, s13]
        pred = np.einsum("cb,ba->cba", right, left) / mid[None, :, None]
        np.testing.assert_allclose(P, pred, atol=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_missing_edges_random_dep(self, seed):
        rng = np.random.default_rng(30 + seed)
        dep = random_markov_dep(4, rng, 0.5)
        cat = enumerate_cliques(dep)
        p = P1Params.random(4, cat.d, rng)
        P = np.exp(p1_log_unnorm_many(p1_all_states(4), p, cat) - p1_psi_enum(p, cat))
        P = P.reshape((4,) * 6)
        ax = lambda k: 5 - k  # noqa: E731
        for a, b in itertools.combinations(range(6), 2):
            if dep.has_edge(a, b):
                continue
            rest = P.sum(axis=(ax(a), ax(b)), keepdims=True)
            pa = P.sum(axis=ax(b), keepdims=True)
            pb = P.sum(axis=ax(a), keepdims=True)
            np.testing.assert_allclose(P * rest, pa * pb, atol=1e-12)


class TestParams:
    def test_hierarchy_cut(self):
        alpha = np.array([[1.0, 0.0, 2.0], [1.0, 3.0, 4.0]])
        p = P1Params(alpha, alpha.copy(), np.zeros(2), np.zeros(2), np.zeros(2)).hierarchical()
        np.testing.assert_array_equal(p.alpha, [[1, 0, 0], [1, 3, 4]])
        np.testing.assert_array_equal(p.beta, [[1, 0, 0], [1, 3, 4]])

    def test_json_roundtrip(self, rng):
        p = P1Params.random(3, 2, rng)
        q = P1Params.from_json(p.to_json(), 3, 2)
        np.testing.assert_array_equal(q.alpha, p.alpha)
        np.testing.assert_array_equal(q.tau, p.tau)

    def test_json_padding(self):
        q = P1Params.from_json({"alpha": [[1.0], [2.0], [3.0]]}, 3, 2)
        np.testing.assert_array_equal(q.alpha, [[1, 0], [2, 0], [3, 0]])
        assert not q.beta.any()

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            P1Params(np.zeros((3, 2)), np.zeros((3, 1)), np.zeros(3), np.zeros(3), np.zeros(3))


class TestDirectedIO:
    def test_roundtrip(self, rng):
        x = DirectedNetwork(4, rng.integers(0, 4, 6))
        assert parse_directed_network(format_directed_network(x)) == x

    def test_arcs(self):
        x = DirectedNetwork.from_arcs(3, [(1, 2), (3, 1), (1, 3)])
        assert x.labels() == ["10", "11", "00"]

    def test_bad_state(self):
        with pytest.raises(ValidationError):
            parse_directed_network("n 3 directed\n1 2 12\n")
        with pytest.raises(ValidationError):
            DirectedNetwork(3, [0, 4, 0])
