"""Relabelling of settings for the classical protocol.

Two pieces:

* :func:`distinct_sum_labeling` gives integer labels whose edge sums are
  pairwise distinct (range separation on the last party).
* :func:`max_parity_assignment` picks bits so that as many edges as possible
  have ``sum of bits = t(e) (mod 2)``. Making *every* edge parity-correct is
  impossible on a frustrated graph, so the maximum is what a protocol can use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .bell import lhv_bound
from .graphs import ExperimentalGraph, SignedEdge, Vertex, require_valid, vertex_key


def target_bit(edge: SignedEdge) -> int:
    return 0 if edge.sign == 1 else 1


@dataclass(frozen=True)
class Labeling:
    labels: Mapping[Vertex, int]

    def edge_sum(self, edge: SignedEdge) -> int:
        return sum(self.labels[v] for v in edge.vertices)

    def has_distinct_sums(self, graph: ExperimentalGraph) -> bool:
        sums = [self.edge_sum(e) for e in graph.edges]
        return len(set(sums)) == len(sums)

    def to_dict(self) -> dict[str, int]:
        return {vertex_key(v): x for v, x in sorted(self.labels.items())}


@dataclass(frozen=True)
class ParityAssignment:
    bits: Mapping[Vertex, int]
    satisfied_edges: tuple[SignedEdge, ...]

    def satisfies(self, edge: SignedEdge) -> bool:
        return sum(self.bits[v] for v in edge.vertices) % 2 == target_bit(edge)

    def signs(self) -> dict[Vertex, int]:
        return {v: (-1) ** b for v, b in self.bits.items()}

    def to_dict(self) -> dict:
        return {
            "bits": {vertex_key(v): b for v, b in sorted(self.bits.items())},
            "satisfied": len(self.satisfied_edges),
        }


def distinct_sum_labeling(graph: ExperimentalGraph) -> Labeling:
    """Labels with pairwise-distinct edge sums.

    The first n-1 parties get mixed-radix labels, so their partial sums take
    distinct values in [0, M). Each vertex of the last party, taken in order,
    gets a label above every edge sum reachable with the earlier ones.
    """
    require_valid(graph)
    labels: dict[Vertex, int] = {}
    radix = 1
    for k in range(graph.parties - 1):
        for i in range(graph.vertex_counts[k]):
            labels[(k, i)] = i * radix
        radix *= graph.vertex_counts[k]
    max_partial = radix - 1
    last = graph.parties - 1
    ceiling = -1  # largest edge sum possible so far
    for j in range(graph.vertex_counts[last]):
        labels[(last, j)] = ceiling + 1
        ceiling = labels[(last, j)] + max_partial
    return Labeling(labels)


def max_parity_assignment(graph: ExperimentalGraph) -> ParityAssignment:
    """Bits maximising the number of parity-correct edges.

    Shares the exhaustive search (and its tie-break) of the LHV bound via
    v(u) = (-1)**bits(u): an edge is parity-correct exactly when the product
    of its ±1 values equals its sign.
    """
    _, assignment = lhv_bound(graph)
    bits = assignment.bits()
    sat = tuple(
        e for e in graph.edges if sum(bits[v] for v in e.vertices) % 2 == target_bit(e)
    )
    return ParityAssignment(bits, sat)


def parity_labeling(graph: ExperimentalGraph) -> Labeling:
    """Distinct-sum labels whose parities carry the max-parity bits.

    Label ``step*x + bit`` with an even ``step`` larger than the party count:
    the bit sum of an edge lies in [0, n] < step, so edge sums stay distinct,
    and the edge-sum parity is the bit-sum parity, i.e. the target bit on
    every satisfied edge.
    """
    base = distinct_sum_labeling(graph)
    bits = max_parity_assignment(graph).bits
    step = 2 * (graph.parties // 2 + 1)
    return Labeling({v: step * x + bits[v] for v, x in base.labels.items()})
