import itertools
import random

from hypothesis import given, settings

from bellcc.bell import lhv_bound
from bellcc.graphs import ExperimentalGraph
from bellcc.labeling import distinct_sum_labeling, max_parity_assignment, parity_labeling, target_bit

from conftest import graphs, random_graph


def _pairwise_distinct(graph, labeling):
    sums = [sum(labeling.labels[v] for v in e.vertices) for e in graph.edges]
    return all(a != b for a, b in itertools.combinations(sums, 2))


def test_chsh_labels(chsh):
    lab = distinct_sum_labeling(chsh)
    assert _pairwise_distinct(chsh, lab)
    assert len({lab.edge_sum(e) for e in chsh.edges}) == 4
    assert all(x >= 0 for x in lab.labels.values())


def test_single_edge_labels():
    g = ExperimentalGraph.from_index_edges((1, 1), [((0, 0), -1)])
    assert distinct_sum_labeling(g).has_distinct_sums(g)


def test_sixcycle_labels(sixcycle):
    lab = distinct_sum_labeling(sixcycle)
    assert _pairwise_distinct(sixcycle, lab)
    assert len({lab.edge_sum(e) for e in sixcycle.edges}) == 6


@settings(max_examples=100, deadline=None)
@given(graphs(max_vertices=12))
def test_labels_distinct_on_random_graphs(graph):
    assert _pairwise_distinct(graph, distinct_sum_labeling(graph))
    lab = parity_labeling(graph)
    assert _pairwise_distinct(graph, lab)
    parity = max_parity_assignment(graph)
    for e in graph.edges:
        assert (lab.edge_sum(e) % 2 == target_bit(e)) == (e in parity.satisfied_edges)


def test_max_parity_examples(chsh, sixcycle):
    assert len(max_parity_assignment(chsh).satisfied_edges) == 3
    assert len(max_parity_assignment(sixcycle).satisfied_edges) == 5


def test_all_positive_tree_fully_satisfied():
    g = ExperimentalGraph.from_index_edges((2, 2), [((0, 0), 1), ((1, 0), 1), ((1, 1), 1)])
    p = max_parity_assignment(g)
    assert len(p.satisfied_edges) == 3
    assert set(p.bits.values()) == {0}


def test_satisfied_edges_consistent(g23):
    p = max_parity_assignment(g23)
    for e in g23.edges:
        assert p.satisfies(e) == (e in p.satisfied_edges)


def test_parity_identity_on_random_graphs():
    rng = random.Random(2024)
    for _ in range(100):
        g = random_graph(rng, max_vertices=12)
        lhv, _ = lhv_bound(g)
        assert 2 * len(max_parity_assignment(g).satisfied_edges) - len(g.edges) == lhv


def test_flipping_a_party_keeps_count_for_even_parties():
    # flipping every bit of one party flips every edge parity; with a sign
    # flip of all edges the count is unchanged
    rng = random.Random(9)
    for _ in range(30):
        g = random_graph(rng, parties=2)
        p = max_parity_assignment(g)
        flipped = {v: b ^ (v[0] == 0) for v, b in p.bits.items()}
        negated = ExperimentalGraph.from_index_edges(g.vertex_counts, [(e.indices, -e.sign) for e in g.edges])
        count = sum(sum(flipped[v] for v in e.vertices) % 2 == target_bit(e) for e in negated.edges)
        assert count == len(p.satisfied_edges)
        assert len(max_parity_assignment(negated).satisfied_edges) == len(p.satisfied_edges)
