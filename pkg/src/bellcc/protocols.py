"""Classical, entanglement-assisted and PR-box protocols for compiled problems.

All three share one skeleton: on input (x_k, y_k) party k obtains a ±1
outcome o_k for setting x_k from its resource, broadcasts e_k = y_k * o_k and
everyone answers prod(e_k). Per edge the protocol wins exactly when
prod(o_k) equals the edge sign, so only the joint outcome law per edge
matters.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from .bell import correlators_from_strategy
from .ccproblem import CCProblem
from .graphs import ExperimentalGraph, SignedEdge, Vertex, vertex_key
from .labeling import ParityAssignment
from .quantum import QuantumStrategy, outcome_distribution

BLOCK_SIZE = 1 << 16
MAX_SENDER_FUNCTIONS = 1 << 20


@dataclass(frozen=True)
class ClassicalStrategy:
    """Convex mixture of deterministic ±1 assignments (shared randomness)."""

    mixture: tuple[tuple[Fraction, Mapping[Vertex, int]], ...]

    def __post_init__(self) -> None:
        mix = tuple((Fraction(w), dict(a)) for w, a in self.mixture)
        if not mix:
            raise ValueError("empty mixture")
        if any(w < 0 for w, _ in mix) or sum(w for w, _ in mix) != 1:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        for _, a in mix:
            if any(s not in (1, -1) for s in a.values()):
                raise ValueError("assignment values must be ±1")
        object.__setattr__(self, "mixture", mix)

    @classmethod
    def deterministic(cls, values: Mapping[Vertex, int]) -> "ClassicalStrategy":
        return cls(((Fraction(1), values),))

    @classmethod
    def from_parity(cls, parity: ParityAssignment) -> "ClassicalStrategy":
        return cls.deterministic(parity.signs())

    def edge_win_probability(self, edge: SignedEdge) -> Fraction:
        try:
            return sum(
                (w for w, a in self.mixture if math.prod(a[v] for v in edge.vertices) == edge.sign),
                Fraction(0),
            )
        except KeyError as exc:
            raise ValueError(f"strategy has no value for vertex {vertex_key(exc.args[0])}") from None


@dataclass(frozen=True)
class PRBox:
    """Per-edge perfectly (anti)correlated outputs with uniform marginals."""

    graph: ExperimentalGraph

    def __post_init__(self) -> None:
        if self.graph.parties != 2:
            raise ValueError("PR box is defined for two-party graphs only")

    def joint(self, edge: SignedEdge) -> tuple[np.ndarray, np.ndarray]:
        outcomes = np.array(list(itertools.product((1, -1), repeat=2)))
        probs = np.where(outcomes[:, 0] * outcomes[:, 1] == edge.sign, 0.5, 0.0)
        return outcomes, probs

    def marginals(self, edge: SignedEdge) -> tuple[dict[int, float], dict[int, float]]:
        outcomes, probs = self.joint(edge)
        alice = {s: float(probs[outcomes[:, 0] == s].sum()) for s in (1, -1)}
        bob = {s: float(probs[outcomes[:, 1] == s].sum()) for s in (1, -1)}
        return alice, bob


Strategy = Union[ClassicalStrategy, QuantumStrategy, PRBox]


@dataclass(frozen=True)
class Empirical:
    freq: float
    samples: int
    seed: int
    successes: int


@dataclass(frozen=True)
class ProtocolOutcome:
    protocol: str
    exact_success: float
    per_edge_success: Mapping[str, float]
    empirical: Empirical | None = None
    exact_fraction: Fraction | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        emp = None
        if self.empirical is not None:
            emp = {
                "freq": self.empirical.freq,
                "samples": self.empirical.samples,
                "seed": self.empirical.seed,
            }
        return {
            "protocol": self.protocol,
            "exact": self.exact_success,
            "empirical": emp,
            "per_edge": dict(self.per_edge_success),
        }

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["protocol", "exact", "empirical", "samples", "seed"])
        emp = self.empirical
        writer.writerow([
            self.protocol,
            f"{self.exact_success:.9g}",
            "" if emp is None else f"{emp.freq:.9g}",
            "" if emp is None else emp.samples,
            "" if emp is None else emp.seed,
        ])
        return buf.getvalue()


def _outcome(protocol: str, problem: CCProblem, per_edge: Sequence) -> ProtocolOutcome:
    edges = problem.graph.edges
    total = sum(per_edge, Fraction(0) if isinstance(per_edge[0], Fraction) else 0.0)
    mean = total / len(edges)
    return ProtocolOutcome(
        protocol,
        float(mean),
        {e.key(): float(p) for e, p in zip(edges, per_edge)},
        exact_fraction=mean if isinstance(mean, Fraction) else None,
    )


def classical_exact(problem: CCProblem, strat: ClassicalStrategy) -> ProtocolOutcome:
    return _outcome("classical", problem, [strat.edge_win_probability(e) for e in problem.graph.edges])


def optimal_classical(problem: CCProblem) -> ClassicalStrategy:
    return ClassicalStrategy.from_parity(problem.parity)


def quantum_exact(problem: CCProblem, strat: QuantumStrategy) -> ProtocolOutcome:
    corr = correlators_from_strategy(problem.graph, strat)
    return _outcome(
        "quantum", problem, [(1 + e.sign * corr[e.vertices]) / 2 for e in problem.graph.edges]
    )


def prbox_exact(problem: CCProblem) -> ProtocolOutcome:
    box = PRBox(problem.graph)
    per_edge = []
    for e in problem.graph.edges:
        outcomes, probs = box.joint(e)
        per_edge.append(float(probs[outcomes.prod(axis=1) == e.sign].sum()))
    return _outcome("prbox", problem, per_edge)


def exact(problem: CCProblem, strategy: Strategy) -> ProtocolOutcome:
    if isinstance(strategy, ClassicalStrategy):
        return classical_exact(problem, strategy)
    if isinstance(strategy, QuantumStrategy):
        return quantum_exact(problem, strategy)
    if isinstance(strategy, PRBox):
        return prbox_exact(problem)
    raise TypeError(f"unknown strategy type {type(strategy).__name__}")


def _edge_laws(problem: CCProblem, strategy: Strategy) -> tuple[np.ndarray, np.ndarray]:
    """Outcome table (K, n) and per-edge probabilities (E, K)."""
    n = problem.parties
    outcomes = np.array(list(itertools.product((1, -1), repeat=n)))
    laws = np.zeros((len(problem.graph.edges), len(outcomes)))
    for c, e in enumerate(problem.graph.edges):
        if isinstance(strategy, ClassicalStrategy):
            for w, a in strategy.mixture:
                row = [a[v] for v in e.vertices]
                laws[c, np.flatnonzero((outcomes == row).all(axis=1))[0]] += float(w)
        elif isinstance(strategy, QuantumStrategy):
            _, laws[c] = outcome_distribution(strategy.state, strategy.edge_observables(e.vertices))
        elif isinstance(strategy, PRBox):
            _, laws[c] = strategy.joint(e)
        else:
            raise TypeError(f"unknown strategy type {type(strategy).__name__}")
    return outcomes, laws


def _block_rng(seed: int, block: int) -> np.random.Generator:
    # counter-derived stream: block b always sees the same numbers
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def simulate(
    problem: CCProblem,
    strategy: Strategy,
    samples: int,
    seed: int,
    workers: int = 1,
) -> ProtocolOutcome:
    """Monte-Carlo run of the broadcast protocol.

    Samples are split into fixed blocks with their own Philox streams, so the
    result depends on (seed, samples) only, never on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if isinstance(strategy, QuantumStrategy):
        strategy.check_covers(problem.graph)
    outcomes, laws = _edge_laws(problem, strategy)
    cdf = np.cumsum(laws, axis=1)[:, :-1]
    t = np.array([0 if e.sign == 1 else 1 for e in problem.graph.edges])
    n_edges, n = len(problem.graph.edges), problem.parties

    def run_block(block: int) -> int:
        size = min(BLOCK_SIZE, samples - block * BLOCK_SIZE)
        rng = _block_rng(seed, block)
        edge = rng.integers(0, n_edges, size=size)
        ys = 1 - 2 * rng.integers(0, 2, size=(size, n))
        u = rng.random(size)
        pick = (u[:, None] >= cdf[edge]).sum(axis=1)
        broadcast = ys * outcomes[pick]
        answer = broadcast.prod(axis=1)
        target = ys.prod(axis=1) * (1 - 2 * t[edge])
        return int((answer == target).sum())

    blocks = range(-(-samples // BLOCK_SIZE))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            wins = sum(pool.map(run_block, blocks))
    else:
        wins = sum(map(run_block, blocks))
    base = exact(problem, strategy)
    return ProtocolOutcome(
        base.protocol,
        base.exact_success,
        base.per_edge_success,
        Empirical(wins / samples, samples, seed, wins),
        base.exact_fraction,
    )


def _best_one_way(f_table: np.ndarray) -> Fraction:
    """Best receiver success when the sender broadcasts one bit.

    ``f_table[a, b]`` is F (±1, 0 off the promise) for sender input a and
    receiver input b. For every sender function the receiver answers, per
    (own input, received bit), with the majority value of F over the
    consistent sender inputs.
    """
    n_send = f_table.shape[0]
    n_funcs = 1 << n_send
    if n_funcs > MAX_SENDER_FUNCTIONS:
        raise ValueError(f"{n_funcs} sender functions exceed the guard {MAX_SENDER_FUNCTIONS}")
    codes = np.arange(n_funcs, dtype=np.int64)
    g = 1 - 2 * ((codes[:, None] >> np.arange(n_send)) & 1)
    mask = np.abs(f_table)
    wins = np.zeros(n_funcs, dtype=np.int64)
    for e in (1, -1):
        chosen = (g == e).astype(np.int64)
        agree = chosen @ f_table  # sum of F over consistent sender inputs
        count = chosen @ mask
        wins += ((count + np.abs(agree)) // 2).sum(axis=1)
    return Fraction(int(wins.max()), int(mask.sum()))


def brute_force_classical_optimum(problem: CCProblem) -> Fraction:
    """Best success of any one-bit broadcast protocol, by exhaustive search.

    A receiver's own broadcast is a function of its own input and tells it
    nothing, so searching over pairs (g_A, g_B) reduces to searching over the
    sender's function for each choice of receiver. Both receivers are tried
    and the larger optimum is returned.
    """
    if problem.parties != 2:
        raise ValueError("brute-force optimum is implemented for two parties")
    m_a, m_b = problem.graph.vertex_counts
    inputs_a = [(x, y) for x in range(m_a) for y in (1, -1)]
    inputs_b = [(x, y) for x in range(m_b) for y in (1, -1)]
    table = np.zeros((len(inputs_a), len(inputs_b)), dtype=np.int64)
    for i, (xa, ya) in enumerate(inputs_a):
        for j, (xb, yb) in enumerate(inputs_b):
            e = problem.edge_at((xa, xb))
            if e is not None:
                table[i, j] = ya * yb * e.sign
    return max(_best_one_way(table), _best_one_way(table.T))
