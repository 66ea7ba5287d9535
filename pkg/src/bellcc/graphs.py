"""Signed experimental compatibility (hyper)graphs.

A vertex is a measurement setting identified by ``(party, index)`` with both
components 0-based. An experimental graph lists the jointly measured setting
tuples (one setting per party) together with a +1/-1 coefficient.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Hashable, Iterable, Mapping

Vertex = tuple[int, int]


class GraphError(ValueError):
    """Raised when an operation needs a valid graph and did not get one."""


@dataclass(frozen=True)
class SignedEdge:
    vertices: tuple[Vertex, ...]
    sign: int = 1

    @property
    def negative(self) -> bool:
        return self.sign == -1

    @property
    def indices(self) -> tuple[int, ...]:
        """Per-party setting indices, in party order."""
        return tuple(i for _, i in self.vertices)

    def key(self) -> str:
        return ",".join(vertex_key(v) for v in self.vertices)


@dataclass(frozen=True)
class ExperimentalGraph:
    parties: int
    vertex_counts: tuple[int, ...]
    edges: tuple[SignedEdge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertex_counts", tuple(self.vertex_counts))
        object.__setattr__(self, "edges", tuple(self.edges))

    @classmethod
    def from_index_edges(
        cls,
        vertex_counts: Iterable[int],
        edges: Iterable[tuple[Iterable[int], int]],
    ) -> "ExperimentalGraph":
        """Build from ``[(per-party indices, sign), ...]``."""
        counts = tuple(vertex_counts)
        signed = tuple(
            SignedEdge(tuple(enumerate(idx)), int(sign)) for idx, sign in edges
        )
        return cls(len(counts), counts, signed)

    def vertices(self) -> list[Vertex]:
        """All measurement vertices in canonical (party, index) order."""
        return [(k, i) for k, m in enumerate(self.vertex_counts) for i in range(m)]

    @property
    def num_vertices(self) -> int:
        return sum(self.vertex_counts)

    def negative_edges(self) -> list[SignedEdge]:
        return [e for e in self.edges if e.sign == -1]

    def edge(self, indices: Iterable[int]) -> SignedEdge | None:
        idx = tuple(indices)
        for e in self.edges:
            if e.indices == idx:
                return e
        return None

    def to_dict(self) -> dict:
        return {
            "parties": self.parties,
            "vertex_counts": list(self.vertex_counts),
            "edges": [
                {"vertices": list(e.indices), "sign": e.sign} for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentalGraph":
        try:
            parties = data["parties"]
            counts = data["vertex_counts"]
            raw_edges = data["edges"]
        except (KeyError, TypeError) as exc:
            raise GraphError(f"graph JSON missing field: {exc}") from None
        if not isinstance(parties, int) or isinstance(parties, bool):
            raise GraphError("'parties' must be an integer")
        if not isinstance(counts, list) or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in counts
        ):
            raise GraphError("'vertex_counts' must be a list of integers")
        if not isinstance(raw_edges, list):
            raise GraphError("'edges' must be a list")
        edges = []
        for n, e in enumerate(raw_edges):
            if not isinstance(e, Mapping) or "vertices" not in e or "sign" not in e:
                raise GraphError(f"edge {n}: expected {{'vertices': [...], 'sign': ±1}}")
            idx = e["vertices"]
            if not isinstance(idx, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in idx
            ):
                raise GraphError(f"edge {n}: 'vertices' must be a list of integers")
            if not isinstance(e["sign"], int) or isinstance(e["sign"], bool):
                raise GraphError(f"edge {n}: 'sign' must be 1 or -1")
            edges.append(SignedEdge(tuple(enumerate(idx)), e["sign"]))
        return cls(parties, tuple(counts), tuple(edges))


def vertex_key(v: Vertex) -> str:
    return f"{v[0]}.{v[1]}"


def parse_vertex_key(key: str) -> Vertex:
    party, _, index = key.partition(".")
    try:
        return int(party), int(index)
    except ValueError:
        raise GraphError(f"bad vertex key {key!r}; expected 'party.index'") from None


def load_graph(path: str | Path) -> ExperimentalGraph:
    with open(path) as fh:
        return ExperimentalGraph.from_dict(json.load(fh))


def dump_graph(graph: ExperimentalGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(graph: ExperimentalGraph) -> ValidationReport:
    """Collect every broken structural invariant of ``graph``."""
    report = ValidationReport()
    bad = report.violations.append
    if graph.parties < 2:
        bad(f"parties must be >= 2, got {graph.parties}")
    if len(graph.vertex_counts) != graph.parties:
        bad(
            f"vertex_counts has {len(graph.vertex_counts)} entries "
            f"for {graph.parties} parties"
        )
    for k, m in enumerate(graph.vertex_counts):
        if m < 1:
            bad(f"party {k} declares {m} vertices")
    if not graph.edges:
        bad("graph has no edges")

    seen: dict[tuple[Vertex, ...], int] = {}
    for n, e in enumerate(graph.edges):
        if e.sign not in (1, -1):
            bad(f"edge {n}: sign must be +1 or -1, got {e.sign}")
        parties = [p for p, _ in e.vertices]
        if len(e.vertices) != graph.parties or sorted(parties) != list(range(graph.parties)):
            bad(f"edge {n}: not one-per-party {list(map(vertex_key, e.vertices))}")
        for p, i in e.vertices:
            if 0 <= p < len(graph.vertex_counts) and not 0 <= i < graph.vertex_counts[p]:
                bad(f"edge {n}: vertex {p}.{i} out of range for party {p}")
            elif not 0 <= p < len(graph.vertex_counts):
                bad(f"edge {n}: unknown party {p}")
        canon = tuple(sorted(e.vertices))
        if canon in seen:
            bad(f"edge {n}: duplicate edge (same vertices as edge {seen[canon]})")
        else:
            seen[canon] = n
    return report


def require_valid(graph: ExperimentalGraph) -> None:
    report = validate(graph)
    if not report.ok:
        raise GraphError("invalid graph: " + "; ".join(report.violations))


@dataclass(frozen=True)
class CompatibilityGraph:
    """Simple undirected graph; ``adjacency`` maps each vertex to its neighbours."""

    vertices: tuple[Hashable, ...]
    adjacency: Mapping[Hashable, frozenset]

    @classmethod
    def from_edges(
        cls, vertices: Iterable[Hashable], edges: Iterable[tuple[Hashable, Hashable]]
    ) -> "CompatibilityGraph":
        verts = tuple(vertices)
        adj: dict[Hashable, set] = {v: set() for v in verts}
        for u, w in edges:
            if u == w:
                raise GraphError(f"self-loop at {u!r}")
            adj[u].add(w)
            adj[w].add(u)
        return cls(verts, {v: frozenset(n) for v, n in adj.items()})

    def edges(self) -> set[frozenset]:
        return {frozenset((u, w)) for u in self.vertices for w in self.adjacency[u]}

    def has_edge(self, u: Hashable, w: Hashable) -> bool:
        return w in self.adjacency[u]


def derive_compatibility_graph(graph: ExperimentalGraph) -> CompatibilityGraph:
    """Every pair of settings inside a hyperedge is compatible."""
    require_valid(graph)
    pairs = (pair for e in graph.edges for pair in combinations(e.vertices, 2))
    return CompatibilityGraph.from_edges(graph.vertices(), pairs)


def lex_bfs(g: CompatibilityGraph) -> list[Hashable]:
    """Lexicographic BFS visiting order (partition refinement)."""
    partition: list[list[Hashable]] = [list(g.vertices)] if g.vertices else []
    order = []
    while partition:
        v = partition[0].pop(0)
        if not partition[0]:
            partition.pop(0)
        order.append(v)
        nbrs = g.adjacency[v]
        refined = []
        for block in partition:
            inside = [u for u in block if u in nbrs]
            outside = [u for u in block if u not in nbrs]
            if inside:
                refined.append(inside)
            if outside:
                refined.append(outside)
        partition = refined
    return order


def is_perfect_elimination_ordering(g: CompatibilityGraph, order: list[Hashable]) -> bool:
    pos = {v: n for n, v in enumerate(order)}
    for v in order:
        later = [u for u in g.adjacency[v] if pos[u] > pos[v]]
        if not later:
            continue
        parent = min(later, key=pos.__getitem__)
        if any(u != parent and u not in g.adjacency[parent] for u in later):
            return False
    return True


def is_chordal(g: CompatibilityGraph) -> bool:
    # reverse lex-BFS order is a PEO iff the graph is chordal
    return is_perfect_elimination_ordering(g, lex_bfs(g)[::-1])


def _is_two_party_cycle(graph: ExperimentalGraph) -> bool:
    if graph.parties != 2 or len(graph.edges) < 4:
        return False
    degree: dict[Vertex, int] = defaultdict(int)
    for e in graph.edges:
        for v in e.vertices:
            degree[v] += 1
    if len(degree) != graph.num_vertices or any(d != 2 for d in degree.values()):
        return False
    # 2-regular: a single cycle iff connected
    adj: dict[Vertex, list[Vertex]] = defaultdict(list)
    for e in graph.edges:
        u, w = e.vertices
        adj[u].append(w)
        adj[w].append(u)
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == graph.num_vertices


@dataclass
class TestabilityReport:
    __test__ = False

    non_chordal: bool
    is_cycle: bool
    negative_edges: int
    odd_negatives: bool | None
    reasons: list[str] = field(default_factory=list)

    @property
    def testable(self) -> bool:
        return self.non_chordal and self.odd_negatives is not False

    def to_dict(self) -> dict:
        return {
            "testable": self.testable,
            "non_chordal": self.non_chordal,
            "is_cycle": self.is_cycle,
            "negative_edges": self.negative_edges,
            "odd_negatives": self.odd_negatives,
            "reasons": list(self.reasons),
        }


def check_testability(graph: ExperimentalGraph) -> TestabilityReport:
    """Necessary conditions for the graph to witness Bell nonlocality.

    Non-chordality of the derived compatibility graph is checked for every
    graph; the odd-negative-edge condition only for two-party cycles. Passing
    does not certify that a violation exists.
    """
    non_chordal = not is_chordal(derive_compatibility_graph(graph))
    cycle = _is_two_party_cycle(graph)
    negatives = len(graph.negative_edges())
    odd = (negatives % 2 == 1) if cycle else None
    reasons = []
    if not non_chordal:
        reasons.append("compatibility graph is chordal")
    if odd is False:
        reasons.append(f"cycle has an even number ({negatives}) of negative edges")
    return TestabilityReport(non_chordal, cycle, negatives, odd, reasons)


def cycle_graph(m: int, negatives: Iterable[tuple[int, int]] | None = None) -> ExperimentalGraph:
    """Two-party 2m-cycle A1-B1-A2-B2-...-Am-Bm-A1 (0-based indices).

    ``negatives`` lists (alice, bob) index pairs carrying sign -1; by default
    only the (A_m, B_m) edge is negative, which is the layout of the 6-cycle
    value table for m = 3.
    """
    if m < 2:
        raise GraphError(f"cycle needs m >= 2, got {m}")
    neg = {(m - 1, m - 1)} if negatives is None else set(negatives)
    pairs = []
    for i in range(m):
        pairs.append((i, i))
        pairs.append(((i + 1) % m, i))
    unknown = neg - set(pairs)
    if unknown:
        raise GraphError(f"negative edges not on the cycle: {sorted(unknown)}")
    return ExperimentalGraph.from_index_edges(
        (m, m), [(p, -1 if p in neg else 1) for p in pairs]
    )
