import itertools

import numpy as np
import pytest

from hiernet.errors import ValidationError
from hiernet.graphs import (
    DependencyGraph,
    Network,
    build_line_graph,
    enumerate_cliques,
    permute_network,
)
from hiernet.suffstats import er_stats, hbeta_stats, hbeta_stats_matrix, her_stats, her_stats_matrix

from oracles import all_networks, count_stars_triangles, naive_her_stats, random_markov_dep


class TestHERStats:
    def test_complete_path3(self, path3_catalog):
        st = her_stats(Network.complete(3), path3_catalog)
        assert list(st.s) == [3, 2] and st.s_t == 0

    def test_single_edge(self, path3_catalog):
        st = her_stats(Network.from_edges(3, [(1, 2)]), path3_catalog)
        assert list(st.s) == [1, 0]

    def test_empty_network(self, path3_catalog):
        st = her_stats(Network.empty(3), path3_catalog)
        assert not st.s.any() and st.s_t == 0

    def test_size_mismatch(self, path3_catalog):
        with pytest.raises(ValidationError):
            her_stats(Network.empty(4), path3_catalog)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_naive_counts(self, seed):
        rng = np.random.default_rng(seed)
        dep = random_markov_dep(4, rng, 0.5)
        cat = enumerate_cliques(dep)
        for x in all_networks(dep.m)[::7]:
            s, st, _ = naive_her_stats(x, dep)
            got = her_stats(Network(4, x), cat)
            assert list(got.s) == s and got.s_t == st

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_line_graph_counts_subgraphs(self, n):
        cat = enumerate_cliques(build_line_graph(n))
        rng = np.random.default_rng(n)
        for _ in range(20):
            x = rng.integers(0, 2, size=n * (n - 1) // 2)
            stars, tri = count_stars_triangles(x, n)
            got = her_stats(Network(n, x), cat)
            for r in range(1, cat.d + 1):
                assert got.s[r - 1] == stars[r]
            assert got.s_t == tri

    def test_permutation_invariance_saturated(self, k4_line):
        cat = enumerate_cliques(k4_line)
        for x in all_networks(6):
            net = Network(4, x)
            ref = her_stats(net, cat).vector()
            for perm in itertools.permutations(range(1, 5)):
                assert np.array_equal(her_stats(permute_network(net, perm), cat).vector(), ref)

    def test_witness_path3(self, path3_catalog):
        a = her_stats(Network.from_edges(3, [(1, 2), (1, 3)]), path3_catalog)
        b = her_stats(Network.from_edges(3, [(1, 2), (2, 3)]), path3_catalog)
        assert a.s[1] == 1 and b.s[1] == 0


class TestHBetaStats:
    def test_complete_path3(self, path3_catalog):
        st = hbeta_stats(Network.complete(3), path3_catalog)
        assert st.d_stats[0, 0] == 2
        assert st.d_stats[0, 1] == 1 and st.d_stats[2, 1] == 1 and st.d_stats[1, 1] == 0

    def test_empty(self, path3_catalog):
        st = hbeta_stats(Network.empty(3), path3_catalog)
        assert not st.d_stats.any() and not st.d_t.any()

    def test_triangle_all_nodes(self):
        cat = enumerate_cliques(build_line_graph(3))
        st = hbeta_stats(Network.complete(3), cat)
        assert list(st.d_t) == [1, 1, 1]

    def test_degrees(self, rng):
        cat = enumerate_cliques(random_markov_dep(5, rng))
        x = Network(5, rng.integers(0, 2, 10))
        st = hbeta_stats(x, cat)
        deg = np.zeros(5, dtype=int)
        for i, j in x.edges():
            deg[i - 1] += 1
            deg[j - 1] += 1
        assert np.array_equal(st.d_stats[:, 0], deg)


class TestConsistency:
    @pytest.mark.parametrize("seed", range(5))
    def test_sums(self, seed):
        rng = np.random.default_rng(50 + seed)
        dep = random_markov_dep(5, rng, 0.6)
        cat = enumerate_cliques(dep)
        X = rng.integers(0, 2, size=(30, dep.m))
        h = her_stats_matrix(X, cat)
        ds, dt = hbeta_stats_matrix(X, cat)
        assert np.array_equal(ds[:, :, 0].sum(axis=1), 2 * h[:, 0])
        assert np.array_equal(dt.sum(axis=1), 3 * h[:, -1])
        for r in range(2, cat.d + 1):
            assert np.array_equal(ds[:, :, r - 1].sum(axis=1), h[:, r - 1])

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_in_edges(self, seed):
        rng = np.random.default_rng(70 + seed)
        dep = random_markov_dep(4, rng, 0.7)
        cat = enumerate_cliques(dep)
        x = rng.integers(0, 2, dep.m)
        base = her_stats_matrix(x[None, :], cat)[0]
        for k in np.flatnonzero(x == 0):
            y = x.copy()
            y[k] = 1
            assert np.all(her_stats_matrix(y[None, :], cat)[0] >= base)


class TestERStats:
    def test_values(self):
        assert er_stats(Network.empty(4)) == 0
        assert er_stats(Network.complete(4)) == 6
        assert er_stats(Network.from_edges(3, [(1, 2), (1, 3)])) == 2

    def test_pooled(self):
        assert er_stats([Network.complete(3), Network.from_edges(3, [(1, 2)])]) == 4

    def test_mixed_sizes_rejected(self, path3_catalog):
        with pytest.raises(ValidationError):
            her_stats_matrix(np.zeros((2, 4)), path3_catalog)
        assert DependencyGraph.empty(3).m == 3
