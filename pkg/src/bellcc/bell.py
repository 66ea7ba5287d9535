"""Bell test functions and their LHV / quantum / non-signaling bounds.

Only the maximisation direction is computed; the minimum of a homogeneous
test function follows by negating every edge sign.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .graphs import ExperimentalGraph, SignedEdge, Vertex, require_valid, vertex_key
from .quantum import (
    PAULI_Z,
    Observable,
    QuantumError,
    QuantumStrategy,
    correlator,
    product_zero,
)

MAX_ENUM_VERTICES = 30
_LOW_BITS = 16
_CELLS_PER_CHUNK = 1 << 22


class SizeGuardError(ValueError):
    """Exhaustive search refused because the instance is too large."""


CorrelatorTable = Mapping[tuple[Vertex, ...], float]


def bell_value(graph: ExperimentalGraph, corr: CorrelatorTable) -> float:
    total = 0.0
    for e in graph.edges:
        try:
            value = corr[e.vertices]
        except KeyError:
            raise KeyError(f"no correlator for edge {e.key()}") from None
        total += e.sign * value
    return total


def ns_bound(graph: ExperimentalGraph) -> int:
    # a PR-type box saturates every edge independently
    return sum(abs(e.sign) for e in graph.edges)


def cycle_tsirelson(m: int) -> float:
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return 2 * m * math.cos(math.pi / (2 * m))


def correlators_from_strategy(
    graph: ExperimentalGraph, strategy: QuantumStrategy
) -> dict[tuple[Vertex, ...], float]:
    strategy.check_covers(graph)
    table = {}
    for e in graph.edges:
        value = correlator(strategy.state, strategy.edge_observables(e.vertices))
        if abs(value) > 1 + 1e-10:
            raise QuantumError(f"edge {e.key()}: |E| = {abs(value)} exceeds 1")
        table[e.vertices] = value
    return table


@dataclass(frozen=True)
class DeterministicAssignment:
    values: Mapping[Vertex, int]

    def bits(self) -> dict[Vertex, int]:
        return {v: 0 if s == 1 else 1 for v, s in self.values.items()}

    def edge_product(self, edge: SignedEdge) -> int:
        return math.prod(self.values[v] for v in edge.vertices)

    def bell_value(self, graph: ExperimentalGraph) -> int:
        return sum(e.sign * self.edge_product(e) for e in graph.edges)

    def to_dict(self) -> dict[str, int]:
        return {vertex_key(v): s for v, s in sorted(self.values.items())}


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def lhv_bound(
    graph: ExperimentalGraph, workers: int = 1
) -> tuple[int, DeterministicAssignment]:
    """Exact LHV bound by enumerating every ±1 assignment.

    Vertices are ordered canonically and encoded as bits (0 means +1, 1 means
    -1), first vertex most significant. Among maximisers the numerically
    smallest code, i.e. the lexicographically smallest bit tuple, wins.
    """
    require_valid(graph)
    verts = graph.vertices()
    nv = len(verts)
    if nv > MAX_ENUM_VERTICES:
        raise SizeGuardError(f"{nv} vertices exceeds the enumeration guard of {MAX_ENUM_VERTICES}")
    pos = {v: k for k, v in enumerate(verts)}
    n_low = min(nv, _LOW_BITS)
    n_high = nv - n_low
    n_edges = len(graph.edges)

    # value of low vertex j under low code l: bit (n_low-1-j) of l
    codes = np.arange(1 << n_low, dtype=np.int64)
    low_vals = 1 - 2 * ((codes[:, None] >> (n_low - 1 - np.arange(n_low))) & 1)
    low_prod = np.ones((1 << n_low, n_edges))
    high_incident: list[list[int]] = [[] for _ in range(n_high)]
    edge_high: list[list[int]] = []
    for c, e in enumerate(graph.edges):
        highs = []
        for v in e.vertices:
            k = pos[v]
            if k < n_high:
                highs.append(k)
                high_incident[k].append(c)
            else:
                low_prod[:, c] *= low_vals[:, k - n_high]
        edge_high.append(highs)
    signs = np.array([e.sign for e in graph.edges], dtype=float)

    def coeffs(h: int) -> np.ndarray:
        vals = [1 - 2 * ((h >> (n_high - 1 - k)) & 1) for k in range(n_high)]
        return signs * np.array([math.prod(vals[k] for k in hs) for hs in edge_high])

    def scan(start: int, stop: int) -> tuple[int, int]:
        # Gray-code walk over high codes: successive codes differ in one vertex
        cols = np.empty((n_edges, stop - start))
        c = coeffs(_gray(start))
        highs = np.empty(stop - start, dtype=np.int64)
        for n, i in enumerate(range(start, stop)):
            if n:
                bit = ((i & -i).bit_length() - 1)
                c = c.copy()
                c[high_incident[n_high - 1 - bit]] *= -1
            cols[:, n] = c
            highs[n] = _gray(i)
        values = low_prod @ cols
        col_best = values.max(axis=0)
        best = col_best.max()
        hit = np.flatnonzero(col_best == best)
        idx = min(int(highs[j] << n_low) | int(np.argmax(values[:, j])) for j in hit)
        return int(round(best)), idx

    total = 1 << n_high
    step = max(1, _CELLS_PER_CHUNK >> n_low)
    ranges = [(s, min(s + step, total)) for s in range(0, total, step)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda r: scan(*r), ranges))
    else:
        results = [scan(*r) for r in ranges]
    best_value = max(v for v, _ in results)
    best_code = min(i for v, i in results if v == best_value)

    values = {
        v: 1 - 2 * ((best_code >> (nv - 1 - k)) & 1) for k, v in enumerate(verts)
    }
    return best_value, DeterministicAssignment(values)


def deterministic_strategy(
    graph: ExperimentalGraph, assignment: DeterministicAssignment
) -> QuantumStrategy:
    """|0...0> with observable v(u)·Z: correlators equal the assignment's products."""
    obs = {v: Observable(s * PAULI_Z) for v, s in assignment.values.items()}
    return QuantumStrategy(product_zero(graph.parties), obs)


@dataclass(frozen=True)
class BellBounds:
    lhv: int
    ns: int
    quantum_lower: float | None
    argmax: DeterministicAssignment
    witness: str | None = None

    def to_dict(self) -> dict:
        return {
            "lhv": self.lhv,
            "ns": self.ns,
            "quantum_lower": self.quantum_lower,
            "argmax_assignment": self.argmax.to_dict(),
        }


def compute_bounds(
    graph: ExperimentalGraph,
    strategies: Iterable[tuple[str, QuantumStrategy]] = (),
    workers: int = 1,
) -> BellBounds:
    """LHV and NS bounds plus the best Bell value among explicit strategies.

    When any strategy is supplied the deterministic LHV optimum, embedded as a
    quantum strategy, is also a candidate, so lhv <= quantum_lower <= ns.
    """
    lhv, argmax = lhv_bound(graph, workers=workers)
    ns = ns_bound(graph)
    best, witness = None, None
    candidates = list(strategies)
    if candidates:
        candidates.append(("deterministic", deterministic_strategy(graph, argmax)))
    for name, strat in candidates:
        value = bell_value(graph, correlators_from_strategy(graph, strat))
        if best is None or value > best:
            best, witness = value, name
    return BellBounds(lhv, ns, best, argmax, witness)
