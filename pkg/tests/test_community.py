import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import clique_bridge, graph_from
from hashjack.community import (LouvainParams, Partition, brute_force_partition,
                                canonical_partition, communities_csv, isolated_nodes, louvain,
                                modularity, read_communities_csv, summary_line)
from oracles import direct_modularity, random_graph

TWO_TRIANGLES = graph_from([("a", "b", 1), ("b", "c", 1), ("c", "a", 1),
                            ("x", "y", 1), ("y", "z", 1), ("z", "x", 1)])
BRIDGED = graph_from([("a", "b", 1), ("b", "c", 1), ("c", "a", 1),
                      ("x", "y", 1), ("y", "z", 1), ("z", "x", 1), ("c", "x", 1)])
TRIANGLE_SPLIT = {"a": 0, "b": 0, "c": 0, "x": 1, "y": 1, "z": 1}


class TestModularity:
    def test_two_triangles(self):
        assert modularity(TWO_TRIANGLES, TRIANGLE_SPLIT) == pytest.approx(0.5, abs=1e-12)

    def test_one_community_zero(self):
        assert modularity(BRIDGED, dict.fromkeys(BRIDGED.nodes, 0)) == pytest.approx(0, abs=1e-12)

    def test_triangle_singletons(self):
        g = graph_from([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)])
        assert modularity(g, {"a": 0, "b": 1, "c": 2}) == pytest.approx(-1 / 3, abs=1e-12)

    def test_missing_node_named(self):
        with pytest.raises(KeyError, match="'z'"):
            modularity(TWO_TRIANGLES, {n: 0 for n in "abcxy"})

    def test_no_edges(self):
        assert modularity(graph_from([]), {}) == 0.0

    def test_resolution(self):
        # gamma scales only the null-model term
        q1 = modularity(BRIDGED, TRIANGLE_SPLIT, 1.0)
        q2 = modularity(BRIDGED, TRIANGLE_SPLIT, 2.0)
        intra = 6 / 7
        assert q2 - intra == pytest.approx(2 * (q1 - intra), abs=1e-12)


class TestLouvain:
    def test_empty(self):
        p = louvain(graph_from([]))
        assert p.assignment == {} and p.modularity == 0.0

    def test_bridged_triangles(self):
        p = louvain(BRIDGED)
        assert p.members(0) == ["a", "b", "c"] and p.members(1) == ["x", "y", "z"]
        assert p.modularity == pytest.approx(brute_force_partition(BRIDGED).modularity, abs=1e-12)

    def test_deterministic(self):
        g = random_graph(np.random.default_rng(3), 40, p=0.15)
        params = LouvainParams(seed=11)
        assert louvain(g, params) == louvain(g, params)

    def test_canonical_ids(self):
        g = clique_bridge(k=4, cliques=3)
        p = louvain(g)
        sizes = [p.community_sizes[c] for c in sorted(p.community_sizes)]
        assert sizes == sorted(sizes, reverse=True)
        firsts = [p.members(c)[0] for c in sorted(p.community_sizes)]
        assert firsts == sorted(firsts)

    def test_params_validated(self):
        for bad in ({"resolution": 0}, {"max_passes": 0}, {"min_gain": -1}, {"restarts": 0}):
            with pytest.raises(ValueError):
                LouvainParams(**bad)

    @pytest.mark.parametrize("k,cliques", [(3, 2), (4, 2), (5, 2), (3, 3), (4, 3), (3, 4)])
    def test_clique_bridge_matches_oracle(self, k, cliques):
        g = clique_bridge(k=k, cliques=cliques)
        oracle = brute_force_partition(g)
        p = louvain(g)
        assert p.assignment == oracle.assignment
        assert p.modularity == pytest.approx(oracle.modularity, abs=1e-12)

    def test_isolated_singletons(self):
        g = graph_from([("a", "b", 1)])
        g = g.__class__(g.hashtag, ("a", "b", "lonely"), g.edges)
        p = louvain(g)
        assert p.community_sizes[p.assignment["lonely"]] == 1
        assert isolated_nodes(g) == ["lonely"]

    def test_audit_gains_sum(self):
        g = random_graph(np.random.default_rng(5), 30, p=0.2)
        params = LouvainParams(seed=2)
        trace = []
        p = louvain(g, params, audit=trace)
        q0 = modularity(g, {n: i for i, n in enumerate(g.nodes)})
        assert trace and all(mv.gain >= params.min_gain for mv in trace)
        assert q0 + sum(mv.gain for mv in trace) == pytest.approx(p.modularity, abs=1e-9)


class TestBruteForce:
    def test_two_triangles(self):
        p = brute_force_partition(TWO_TRIANGLES)
        assert p.modularity == pytest.approx(0.5, abs=1e-12)
        assert p.members(0) == ["a", "b", "c"]

    def test_single_edge(self):
        g = graph_from([("a", "b", 1)])
        p = brute_force_partition(g)
        assert p.n_communities == 1 and p.modularity == pytest.approx(0, abs=1e-12)
        assert modularity(g, {"a": 0, "b": 1}) == pytest.approx(-0.5)

    def test_refuses_13(self):
        g = graph_from([(f"n{i}", f"n{i + 1}", 1) for i in range(12)])
        with pytest.raises(ValueError):
            brute_force_partition(g)

    def test_exhaustive_on_four_nodes(self):
        # all 15 partitions of a 4-node path, scored by the dense oracle
        g = graph_from([("a", "b", 2), ("b", "c", 1), ("c", "d", 2)])
        from itertools import product
        best = max(direct_modularity(g, dict(zip("abcd", labels)))
                   for labels in product(range(4), repeat=4))
        assert brute_force_partition(g).modularity == pytest.approx(best, abs=1e-12)


class TestExport:
    def test_csv_roundtrip(self):
        p = louvain(BRIDGED)
        text = communities_csv(p)
        assert text.splitlines()[0] == "account,community_id"
        assert read_communities_csv(text, BRIDGED) == p

    def test_summary(self):
        line = summary_line(BRIDGED, louvain(BRIDGED))
        assert line.startswith("hashtag=t nodes=6 modularity=0.357142857143 communities=2")


# -- properties ----------------------------------------------------------------

graphs = st.builds(lambda seed, n: random_graph(np.random.default_rng(seed), n),
                   st.integers(0, 2**32 - 1), st.integers(2, 9))


@settings(max_examples=40)
@given(graphs, st.integers(0, 1000))
def test_louvain_near_oracle_and_above_random(g, seed):
    p = louvain(g, LouvainParams(seed=seed))
    oracle = brute_force_partition(g)
    assert p.modularity >= oracle.modularity - 0.05
    assert p.modularity <= oracle.modularity + 1e-12
    rng = np.random.default_rng(seed)
    random_labels = {n: int(rng.integers(len(g.nodes) or 1)) for n in g.nodes}
    assert p.modularity >= modularity(g, random_labels) - 1e-12


@given(graphs, st.integers(0, 1000))
def test_modularity_matches_direct_sum(g, seed):
    rng = np.random.default_rng(seed)
    labels = {n: int(rng.integers(3)) for n in g.nodes}
    assert modularity(g, labels) == pytest.approx(direct_modularity(g, labels), abs=1e-12)


@given(graphs, st.permutations(range(9)))
def test_relabel_invariant(g, perm):
    labels = {n: i % 3 for i, n in enumerate(g.nodes)}
    relabeled = {n: perm[c] for n, c in labels.items()}
    assert modularity(g, labels) == pytest.approx(modularity(g, relabeled), abs=1e-12)


@given(graphs, st.integers(2, 50))
def test_weight_scale_invariant(g, factor):
    scaled = g.from_edges(g.hashtag, {e: w * factor for e, w in g.edges.items()})
    labels = {n: i % 2 for i, n in enumerate(g.nodes)}
    assert modularity(g, labels) == pytest.approx(modularity(scaled, labels), abs=1e-12)


@given(graphs, st.integers(0, 1000))
def test_partition_invariants(g, seed):
    p = louvain(g, LouvainParams(seed=seed))
    assert set(p.assignment) == set(g.nodes)
    assert sorted(p.community_sizes) == list(range(p.n_communities))
    assert p.modularity == pytest.approx(direct_modularity(g, p.assignment), abs=1e-12)
    assert -0.5 <= p.modularity <= 1
    again = canonical_partition(g, p.assignment)
    assert again == p and isinstance(again, Partition)
