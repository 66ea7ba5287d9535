"""Pure-state qubit/qudit simulation for Bell correlators.

Everything is dense: states are at most a few qubits, so plain numpy arrays
and tensordot contractions are enough.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import ExperimentalGraph, GraphError, Vertex, parse_vertex_key, require_valid, vertex_key

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
EIGEN_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class QuantumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if math.prod(self.dims) != amps.size:
            raise QuantumError(f"dims {self.dims} do not match {amps.size} amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise QuantumError(f"state not normalised (norm={norm!r})")

    @property
    def parties(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class Observable:
    """A ±1-valued Hermitian observable, optionally given by a Bloch vector."""

    matrix: np.ndarray
    bloch: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise QuantumError(f"observable must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise QuantumError("observable is not Hermitian")
        eig = np.linalg.eigvalsh(mat)
        if np.max(np.abs(np.abs(eig) - 1.0), initial=0.0) > EIGEN_TOL:
            raise QuantumError(f"observable eigenvalues {eig} are not ±1")
        if self.bloch is not None:
            v = np.asarray(self.bloch, dtype=float)
            if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
                raise QuantumError("Bloch vector is not unit length")
            if np.max(np.abs(mat - _bloch_matrix(v))) > HERMITIAN_TOL:
                raise QuantumError("matrix does not match Bloch vector")
            object.__setattr__(self, "bloch", tuple(float(x) for x in v))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projector(self, outcome: int) -> np.ndarray:
        """Eigenprojector onto the ``outcome`` (±1) eigenspace."""
        return (np.eye(self.dim) + outcome * self.matrix) / 2

    def negated(self) -> "Observable":
        bloch = None if self.bloch is None else tuple(-x for x in self.bloch)
        return Observable(-self.matrix, bloch)


def _bloch_matrix(v: np.ndarray) -> np.ndarray:
    return v[0] * PAULI_X + v[1] * PAULI_Y + v[2] * PAULI_Z


def observable_from_bloch(v: Sequence[float]) -> Observable:
    vec = np.asarray(v, dtype=float)
    if vec.shape != (3,):
        raise QuantumError(f"Bloch vector must have 3 components, got {vec.shape}")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-9:
        raise QuantumError(f"Bloch vector must be unit length, |v|={norm!r}")
    vec = vec / norm
    return Observable(_bloch_matrix(vec), tuple(vec))


def planar_observable(theta: float) -> Observable:
    """Observable along (cos θ, 0, sin θ) in the x-z plane."""
    return observable_from_bloch((math.cos(theta), 0.0, math.sin(theta)))


def singlet() -> StateVector:
    s = 1 / math.sqrt(2)
    return StateVector(np.array([0, s, -s, 0], dtype=complex), (2, 2))


def ghz(n: int) -> StateVector:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return StateVector(amps, (2,) * n)


def product_zero(n: int) -> StateVector:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps, (2,) * n)


def _apply_local(state: StateVector, ops: Sequence[np.ndarray]) -> np.ndarray:
    if len(ops) != state.parties:
        raise QuantumError(f"{len(ops)} observables for a {state.parties}-party state")
    psi = state.tensor()
    for k, op in enumerate(ops):
        if op.shape != (state.dims[k], state.dims[k]):
            raise QuantumError(
                f"party {k}: operator shape {op.shape} vs local dimension {state.dims[k]}"
            )
        psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [k])), 0, k)
    return psi


def correlator(state: StateVector, observables: Sequence[Observable]) -> float:
    """<psi| O_1 ⊗ ... ⊗ O_n |psi>."""
    out = _apply_local(state, [o.matrix for o in observables])
    value = np.vdot(state.tensor(), out)
    if abs(value.imag) > 1e-10:
        raise QuantumError(f"correlator has imaginary part {value.imag!r}")
    return float(value.real)


def outcome_distribution(
    state: StateVector, observables: Sequence[Observable]
) -> tuple[np.ndarray, np.ndarray]:
    """Joint Born distribution of the ±1 outcomes.

    Returns ``(outcomes, probs)``: outcomes has shape (2**n, n) with entries
    ±1 in itertools.product order of (+1, -1); probs sums to one.
    """
    outcomes = np.array(list(itertools.product((1, -1), repeat=len(observables))))
    probs = np.empty(len(outcomes))
    psi = state.tensor()
    for row, signs in enumerate(outcomes):
        out = _apply_local(state, [o.projector(s) for o, s in zip(observables, signs)])
        probs[row] = np.vdot(psi, out).real
    probs = np.clip(probs, 0.0, None)
    return outcomes, probs / probs.sum()


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    state: StateVector
    observables: Mapping[Vertex, Observable]

    def check_covers(self, graph: ExperimentalGraph) -> None:
        if graph.parties != self.state.parties:
            raise QuantumError(
                f"{self.state.parties}-party state for a {graph.parties}-party graph"
            )
        for v in graph.vertices():
            if v not in self.observables:
                raise QuantumError(f"no observable for vertex {vertex_key(v)}")
            if self.observables[v].dim != self.state.dims[v[0]]:
                raise QuantumError(
                    f"vertex {vertex_key(v)}: observable dimension "
                    f"{self.observables[v].dim} vs local {self.state.dims[v[0]]}"
                )

    def edge_observables(self, vertices: Iterable[Vertex]) -> list[Observable]:
        try:
            return [self.observables[v] for v in vertices]
        except KeyError as exc:
            raise QuantumError(f"no observable for vertex {vertex_key(exc.args[0])}") from None

    def with_observables(self, updates: Mapping[Vertex, Observable]) -> "QuantumStrategy":
        return QuantumStrategy(self.state, {**self.observables, **updates})

    def to_dict(self) -> dict:
        if self.state.dims == (2, 2) and np.allclose(self.state.amplitudes, singlet().amplitudes):
            state: str | dict = "singlet"
        else:
            state = {
                "amplitudes": [[a.real, a.imag] for a in self.state.amplitudes],
                "dims": list(self.state.dims),
            }
        obs = {}
        for v in sorted(self.observables):
            o = self.observables[v]
            if o.bloch is not None:
                obs[vertex_key(v)] = {"bloch": list(o.bloch)}
            else:
                obs[vertex_key(v)] = {
                    "matrix": [[[z.real, z.imag] for z in row] for row in o.matrix]
                }
        return {"state": state, "observables": obs}

    @classmethod
    def from_dict(cls, data: Mapping) -> "QuantumStrategy":
        try:
            raw_state = data["state"]
            raw_obs = data["observables"]
        except (KeyError, TypeError) as exc:
            raise QuantumError(f"strategy JSON missing field: {exc}") from None
        if raw_state == "singlet":
            state = singlet()
        elif isinstance(raw_state, Mapping):
            amps = [complex(re, im) for re, im in raw_state["amplitudes"]]
            state = StateVector(np.array(amps), tuple(raw_state["dims"]))
        else:
            raise QuantumError(f"unknown state {raw_state!r}")
        observables = {}
        for key, spec in raw_obs.items():
            v = parse_vertex_key(key)
            if "bloch" in spec:
                observables[v] = observable_from_bloch(spec["bloch"])
            elif "matrix" in spec:
                mat = np.array([[complex(re, im) for re, im in row] for row in spec["matrix"]])
                observables[v] = Observable(mat)
            else:
                raise QuantumError(f"observable {key}: expected 'bloch' or 'matrix'")
        return cls(state, observables)


def load_strategy(path: str | Path) -> QuantumStrategy:
    with open(path) as fh:
        return QuantumStrategy.from_dict(json.load(fh))


def dump_strategy(strategy: QuantumStrategy, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(strategy.to_dict(), fh, indent=2)
        fh.write("\n")


def cycle_strategy(m: int) -> QuantumStrategy:
    """Singlet strategy for the 2m-cycle.

    Alice's i-th setting (i = 1..m) points at angle (2i-1)π/2m and Bob's j-th
    at jπ/m in the x-z plane. With the singlet every cycle edge has
    |E| = cos(π/2m); see :func:`align_to_graph` for matching edge signs.
    """
    if m < 2:
        raise QuantumError(f"cycle strategy needs m >= 2, got {m}")
    obs = {}
    for i in range(1, m + 1):
        obs[(0, i - 1)] = planar_observable((2 * i - 1) * math.pi / (2 * m))
        obs[(1, i - 1)] = planar_observable(i * math.pi / m)
    return QuantumStrategy(singlet(), obs)


def align_to_graph(
    graph: ExperimentalGraph, strategy: QuantumStrategy, tol: float = 1e-12
) -> QuantumStrategy:
    """Negate observables so every edge correlator has the sign of its edge.

    Negating an observable only relabels that setting's outcomes, so the
    strategy stays valid. Raises QuantumError if the sign pattern is
    frustrated (e.g. cycle with the wrong number of negative edges).
    """
    strategy.check_covers(graph)
    # parity constraint flip(u) * flip(w) * sign(E) == gamma for two-party edges;
    # for hyperedges the flip is put on the last party's vertex only.
    need: dict[Vertex, list[tuple[Vertex, int]]] = defaultdict(list)
    fixed: list[tuple[Vertex, int]] = []
    for e in graph.edges:
        value = correlator(strategy.state, strategy.edge_observables(e.vertices))
        if abs(value) <= tol:
            continue
        rel = e.sign * (1 if value > 0 else -1)
        if graph.parties == 2:
            u, w = e.vertices
            need[u].append((w, rel))
            need[w].append((u, rel))
        else:
            fixed.append((e.vertices[-1], rel))
    flips: dict[Vertex, int] = {}
    for v, rel in fixed:
        if flips.setdefault(v, rel) != rel:
            raise QuantumError("edge signs cannot be matched by local relabeling")
    for root in graph.vertices():
        if root in flips:
            continue
        flips[root] = 1
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w, rel in need[u]:
                want = flips[u] * rel
                if w not in flips:
                    flips[w] = want
                    queue.append(w)
                elif flips[w] != want:
                    raise QuantumError("edge signs cannot be matched by local relabeling")
    return strategy.with_observables(
        {v: strategy.observables[v].negated() for v, f in flips.items() if f == -1}
    )


def cycle_strategy_for(graph: ExperimentalGraph) -> QuantumStrategy:
    """:func:`cycle_strategy` laid onto an arbitrary two-party cycle graph.

    Walks the cycle from Alice's first setting, gives the k-th visited Alice
    and Bob settings the k-th cycle angles, then aligns edge signs.
    """
    require_valid(graph)
    adj: dict[Vertex, list[Vertex]] = defaultdict(list)
    for e in graph.edges:
        u, w = e.vertices
        adj[u].append(w)
        adj[w].append(u)
    if graph.parties != 2 or any(len(adj[v]) != 2 for v in graph.vertices()):
        raise GraphError("graph is not a two-party cycle")
    walk = [(0, 0)]
    prev = None
    while True:
        cur = walk[-1]
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        if nxt == walk[0]:
            break
        prev = cur
        walk.append(nxt)
    if len(walk) != graph.num_vertices:
        raise GraphError("graph is not a single cycle")
    m = len(walk) // 2
    base = cycle_strategy(m)
    obs = {v: base.observables[(v[0], k // 2)] for k, v in enumerate(walk)}
    return align_to_graph(graph, QuantumStrategy(base.state, obs))


def planar_strategy(angles: Mapping[Vertex, float]) -> QuantumStrategy:
    return QuantumStrategy(singlet(), {v: planar_observable(t) for v, t in angles.items()})


def angles_from_assignment(assignment: Mapping[Vertex, int]) -> dict[Vertex, float]:
    """Planar angles on the singlet reproducing a deterministic ±1 assignment.

    Alice's setting becomes ±Z; Bob's is flipped to cancel the singlet's
    anticorrelation, so E(u, w) = v(u) v(w).
    """
    up, down = math.pi / 2, 3 * math.pi / 2
    angles = {}
    for (party, idx), val in assignment.items():
        s = val if party == 0 else -val
        angles[(party, idx)] = up if s == 1 else down
    return angles


def _signed_sum(graph: ExperimentalGraph, strategy: QuantumStrategy) -> float:
    return sum(
        e.sign * correlator(strategy.state, strategy.edge_observables(e.vertices))
        for e in graph.edges
    )


def optimize_planar_strategy(
    graph: ExperimentalGraph,
    resolution: int = 720,
    sweeps: int = 50,
    *,
    restarts: int = 8,
    seed: int = 0,
    initial: Mapping[Vertex, float] | None = None,
) -> tuple[QuantumStrategy, float]:
    """Coordinate ascent over x-z plane angles with the singlet.

    Each sweep visits every vertex and moves its angle to the best of
    ``resolution`` equally spaced grid points (keeping the current angle on
    ties). ``initial``, if given, is run as an extra first start. The
    returned value is recomputed from the returned strategy, so it is attained.
    """
    require_valid(graph)
    if graph.parties != 2:
        raise GraphError("planar optimizer handles two-party graphs only")
    if resolution < 1 or sweeps < 0 or restarts < 0:
        raise ValueError("resolution must be >= 1, sweeps and restarts >= 0")

    verts = graph.vertices()
    index = {v: n for n, v in enumerate(verts)}
    incident: list[list[tuple[int, int]]] = [[] for _ in verts]
    for e in graph.edges:
        u, w = (index[v] for v in e.vertices)
        incident[u].append((w, e.sign))
        incident[w].append((u, e.sign))
    edge_u = np.array([index[e.vertices[0]] for e in graph.edges])
    edge_w = np.array([index[e.vertices[1]] for e in graph.edges])
    edge_s = np.array([e.sign for e in graph.edges], dtype=float)
    grid = np.arange(resolution) * (2 * math.pi / resolution)

    def value(theta: np.ndarray) -> float:
        # singlet: E = -cos(θu - θw)
        return float(-(edge_s * np.cos(theta[edge_u] - theta[edge_w])).sum())

    def ascend(theta: np.ndarray) -> np.ndarray:
        for _ in range(sweeps):
            moved = False
            for v in range(len(verts)):
                if not incident[v]:
                    continue
                others = np.array([theta[w] for w, _ in incident[v]])
                signs = np.array([s for _, s in incident[v]], dtype=float)
                cand = np.concatenate(([theta[v]], grid))
                local = -(signs[None, :] * np.cos(cand[:, None] - others[None, :])).sum(axis=1)
                best = int(np.argmax(local))
                if best != 0 and local[best] > local[0]:
                    theta[v] = cand[best]
                    moved = True
            if not moved:
                break
        return theta

    starts = []
    if initial is not None:
        starts.append(np.array([initial[v] for v in verts], dtype=float))
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.Generator(np.random.Philox(child))
        starts.append(rng.uniform(0, 2 * math.pi, size=len(verts)))

    best_theta, best_value = None, -math.inf
    for start in starts:
        theta = ascend(start.copy())
        val = value(theta)
        if val > best_value:
            best_theta, best_value = theta, val
    if best_theta is None:
        raise ValueError("no starting point: give restarts >= 1 or an initial point")
    strategy = planar_strategy({v: float(t) for v, t in zip(verts, best_theta)})
    return strategy, _signed_sum(graph, strategy)
