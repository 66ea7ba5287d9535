"""Compile a signed experimental graph into a promise communication problem.

Party k receives a setting index x_k and a sign y_k. On the promise (the
settings form an edge) the parties must output
``F = y_1 ... y_n * (-1)**t(x_1..x_n)`` where t is 0 on positive and 1 on
negative edges. Inputs are uniform over (edge, y-tuple) pairs and each party
may broadcast a single bit.

Internally y is ±1. Serialised inputs use bits: 0 -> +1, 1 -> -1.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .graphs import (
    ExperimentalGraph,
    SignedEdge,
    TestabilityReport,
    check_testability,
    require_valid,
)
from .labeling import Labeling, ParityAssignment, max_parity_assignment, parity_labeling, target_bit


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNDEFINED"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _Undefined()


def bit_to_sign(bit: int) -> int:
    if bit not in (0, 1):
        raise ValueError(f"expected a bit, got {bit!r}")
    return 1 - 2 * bit


def sign_to_bit(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"expected ±1, got {sign!r}")
    return (1 - sign) // 2


@dataclass(frozen=True)
class TargetFunction:
    values: Mapping[tuple[int, ...], int]

    @classmethod
    def from_graph(cls, graph: ExperimentalGraph) -> "TargetFunction":
        return cls({e.indices: target_bit(e) for e in graph.edges})

    def __call__(self, settings: Sequence[int]):
        return self.values.get(tuple(settings), UNDEFINED)


@dataclass(frozen=True)
class InputDistribution:
    """Uniform over the promise set: every (edge, y-tuple) has equal mass."""

    edges: tuple[SignedEdge, ...]
    parties: int

    @property
    def mass(self) -> Fraction:
        return Fraction(1, 2**self.parties * len(self.edges))

    def support(self) -> Iterator[tuple[SignedEdge, tuple[int, ...]]]:
        for e in self.edges:
            for ys in itertools.product((1, -1), repeat=self.parties):
                yield e, ys

    def probability(self, settings: Sequence[int], ys: Sequence[int]) -> Fraction:
        if all(y in (1, -1) for y in ys) and any(e.indices == tuple(settings) for e in self.edges):
            return self.mass
        return Fraction(0)


@dataclass(frozen=True)
class CCProblem:
    graph: ExperimentalGraph
    target: TargetFunction
    distribution: InputDistribution
    testability: TestabilityReport
    labeling: Labeling
    parity: ParityAssignment
    comm_budget: int = 1
    _edge_index: Mapping[tuple[int, ...], SignedEdge] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_edge_index", {e.indices: e for e in self.graph.edges})

    @property
    def parties(self) -> int:
        return self.graph.parties

    def edge_at(self, settings: Sequence[int]) -> SignedEdge | None:
        return self._edge_index.get(tuple(settings))

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "testability": self.testability.to_dict(),
            "comm_budget_bits_per_party": self.comm_budget,
            "target": [{"vertices": list(e.indices), "t": target_bit(e)} for e in self.graph.edges],
            "distribution": {
                "mass": str(self.distribution.mass),
                "support_size": 2**self.parties * len(self.graph.edges),
            },
            "labeling": self.labeling.to_dict(),
            "parity_assignment": self.parity.to_dict(),
            "support": [
                {"x": list(e.indices), "y_bits": [sign_to_bit(y) for y in ys], "F": evaluate_F(self, list(zip(e.indices, ys)))}
                for e, ys in self.distribution.support()
            ],
        }


def compile_problem(graph: ExperimentalGraph) -> CCProblem:
    """Build the communication problem of ``graph``.

    Graphs that fail the testability conditions still compile; the report
    travels with the problem.
    """
    require_valid(graph)
    return CCProblem(
        graph=graph,
        target=TargetFunction.from_graph(graph),
        distribution=InputDistribution(graph.edges, graph.parties),
        testability=check_testability(graph),
        labeling=parity_labeling(graph),
        parity=max_parity_assignment(graph),
    )


def evaluate_F(problem: CCProblem, inputs: Sequence[tuple[int, int]]):
    """F on per-party ``(x_k, y_k)`` (x 0-based, y = ±1); UNDEFINED off the promise."""
    if len(inputs) != problem.parties:
        raise ValueError(f"expected {problem.parties} (x, y) pairs, got {len(inputs)}")
    for k, (x, y) in enumerate(inputs):
        if not 0 <= x < problem.graph.vertex_counts[k]:
            raise ValueError(f"party {k}: setting {x} out of range")
        if y not in (1, -1):
            raise ValueError(f"party {k}: y must be ±1, got {y!r}")
    t = problem.target([x for x, _ in inputs])
    if t is UNDEFINED:
        return UNDEFINED
    return math.prod(y for _, y in inputs) * (-1) ** t


def _label(x: int, y: int) -> str:
    return f"({x + 1},{'+1' if y == 1 else '-1'})"


@dataclass(frozen=True)
class ValueTable:
    """Rows indexed by Bob's (x, y), columns by Alice's; settings shown 1-based."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: tuple[tuple[object, ...], ...]

    def defined_count(self) -> int:
        return sum(c is not UNDEFINED for row in self.cells for c in row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["", *self.col_labels])
        for label, row in zip(self.row_labels, self.cells):
            writer.writerow([label, *("-" if c is UNDEFINED else str(c) for c in row)])
        return buf.getvalue()


def value_table(problem: CCProblem) -> ValueTable:
    if problem.parties != 2:
        raise ValueError("value tables are defined for two-party problems only")
    m_a, m_b = problem.graph.vertex_counts
    cols = [(x, y) for x in range(m_a) for y in (1, -1)]
    rows = [(x, y) for x in range(m_b) for y in (1, -1)]
    cells = tuple(
        tuple(evaluate_F(problem, [a, b]) for a in cols) for b in rows
    )
    return ValueTable(
        tuple(_label(*r) for r in rows), tuple(_label(*c) for c in cols), cells
    )


def load_problem(data: Mapping) -> CCProblem:
    """Compile from either a graph JSON object or a compiled-problem object."""
    graph_data = data["graph"] if "graph" in data else data
    return compile_problem(ExperimentalGraph.from_dict(graph_data))
