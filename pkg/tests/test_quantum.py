import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellcc.bell import bell_value, correlators_from_strategy, cycle_tsirelson, lhv_bound, ns_bound
from bellcc.graphs import ExperimentalGraph, GraphError, cycle_graph
from bellcc.quantum import (
    PAULI_X,
    PAULI_Z,
    Observable,
    QuantumError,
    QuantumStrategy,
    StateVector,
    align_to_graph,
    angles_from_assignment,
    correlator,
    cycle_strategy,
    cycle_strategy_for,
    ghz,
    observable_from_bloch,
    optimize_planar_strategy,
    outcome_distribution,
    planar_observable,
    singlet,
)

from oracles import singlet_correlator_formula

GOLDEN = (1 + math.sqrt(5)) / 2
# the 12 vertices of an icosahedron: a spread of Bloch directions
ICOSAHEDRON = [
    np.array(v) / math.hypot(1, GOLDEN)
    for s1, s2 in itertools.product((1, -1), repeat=2)
    for v in ((0, s1, s2 * GOLDEN), (s1, s2 * GOLDEN, 0), (s2 * GOLDEN, 0, s1))
]


def test_singlet_amplitudes():
    s = 1 / math.sqrt(2)
    psi = singlet()
    np.testing.assert_allclose(psi.amplitudes, [0, s, -s, 0])
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-15)
    assert abs(psi.amplitudes[0]) == 0


def test_state_validation():
    with pytest.raises(QuantumError):
        StateVector(np.array([1, 1]), (2,))
    with pytest.raises(QuantumError):
        StateVector(np.array([1, 0, 0]), (2, 2))


def test_bloch_axes():
    np.testing.assert_array_equal(observable_from_bloch((0, 0, 1)).matrix, np.diag([1, -1]))
    np.testing.assert_array_equal(observable_from_bloch((1, 0, 0)).matrix, [[0, 1], [1, 0]])


def test_bloch_diagonal_direction():
    c = math.cos(math.pi / 4)
    obs = observable_from_bloch((c, 0, math.sin(math.pi / 4)))
    expected = (PAULI_X + PAULI_Z) / math.sqrt(2)
    np.testing.assert_allclose(obs.matrix, expected, atol=1e-15)
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(expected)), [-1, 1], atol=1e-12)


@pytest.mark.parametrize("v", [(0, 0, 2), (0.5, 0, 0), (1, 1, 1), (1, 0)])
def test_non_unit_bloch_rejected(v):
    with pytest.raises(QuantumError):
        observable_from_bloch(v)


def test_observable_checks():
    with pytest.raises(QuantumError):
        Observable(np.array([[0, 1], [0, 0]]))
    with pytest.raises(QuantumError):
        Observable(np.diag([1.0, 0.5]))
    with pytest.raises(QuantumError):
        Observable(PAULI_Z, bloch=(1.0, 0.0, 0.0))


@pytest.mark.parametrize("a", range(12))
def test_singlet_correlator_grid(a):
    for b in ICOSAHEDRON:
        va = ICOSAHEDRON[a]
        got = correlator(singlet(), [observable_from_bloch(va), observable_from_bloch(b)])
        assert got == pytest.approx(singlet_correlator_formula(va, b), abs=1e-10)


def test_singlet_simple_correlators():
    z, x = observable_from_bloch((0, 0, 1)), observable_from_bloch((1, 0, 0))
    assert correlator(singlet(), [z, z]) == pytest.approx(-1, abs=1e-15)
    assert correlator(singlet(), [z, x]) == pytest.approx(0, abs=1e-15)


def test_ghz_xxx():
    x = observable_from_bloch((1, 0, 0))
    psi = ghz(3).amplitudes
    direct = np.vdot(psi, np.kron(np.kron(PAULI_X, PAULI_X), PAULI_X) @ psi).real
    assert direct == pytest.approx(1.0)
    assert correlator(ghz(3), [x, x, x]) == pytest.approx(direct, abs=1e-12)


def test_correlator_dimension_mismatch():
    with pytest.raises(QuantumError):
        correlator(singlet(), [planar_observable(0.0)])
    with pytest.raises(QuantumError):
        correlator(singlet(), [planar_observable(0.0), Observable(np.diag([1, -1, 1]))])


unit = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)


def _random_state(rng, dims):
    v = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return StateVector(v / np.linalg.norm(v), dims)


@given(unit, unit, unit, st.integers(0, 2**32 - 1))
def test_correlator_bounded_and_linear(a, b, c, seed):
    rng = np.random.default_rng(seed)
    psi = _random_state(rng, (2, 2))
    oa, ob, oc = (observable_from_bloch(np.array(v) / np.linalg.norm(v)) for v in (a, b, c))
    value = correlator(psi, [oa, ob])
    assert abs(value) <= 1 + 1e-10
    # linear in Bob's operator: E(A, B + C) = E(A, B) + E(A, C)
    mixed = np.vdot(psi.amplitudes, np.kron(oa.matrix, ob.matrix + oc.matrix) @ psi.amplitudes).real
    assert mixed == pytest.approx(value + correlator(psi, [oa, oc]), abs=1e-10)


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_planar_singlet_is_minus_cosine(t1, t2):
    got = correlator(singlet(), [planar_observable(t1), planar_observable(t2)])
    assert got == pytest.approx(-math.cos(t1 - t2), abs=1e-10)


def test_outcome_distribution_matches_correlator():
    obs = [planar_observable(0.3), planar_observable(1.4)]
    outcomes, probs = outcome_distribution(singlet(), obs)
    assert probs.sum() == pytest.approx(1.0)
    assert (probs >= 0).all()
    assert float((outcomes.prod(axis=1) * probs).sum()) == pytest.approx(correlator(singlet(), obs), abs=1e-12)
    # singlet marginals are uniform
    assert probs[outcomes[:, 0] == 1].sum() == pytest.approx(0.5)


def test_cycle_strategy_angles_and_first_edge():
    strat = cycle_strategy(2)
    a1, b1 = strat.observables[(0, 0)], strat.observables[(1, 0)]
    np.testing.assert_allclose(a1.bloch, (math.cos(math.pi / 4), 0, math.sin(math.pi / 4)))
    np.testing.assert_allclose(b1.bloch, (0, 0, 1), atol=1e-15)
    assert correlator(strat.state, [a1, b1]) == pytest.approx(-math.cos(math.pi / 4), abs=1e-12)
    with pytest.raises(QuantumError):
        cycle_strategy(1)


@pytest.mark.parametrize("m", range(2, 9))
def test_cycle_strategy_reaches_tsirelson(m):
    g = cycle_graph(m)
    strat = align_to_graph(g, cycle_strategy(m))
    value = bell_value(g, correlators_from_strategy(g, strat))
    assert value == pytest.approx(2 * m * math.cos(math.pi / (2 * m)), abs=1e-9)
    assert value == pytest.approx(cycle_tsirelson(m), abs=1e-9)


def test_cycle_strategy_for_relabelled_cycle():
    # 6-cycle with permuted setting indices and three negative edges
    pairs = [(2, 1), (0, 1), (0, 0), (1, 0), (1, 2), (2, 2)]
    g = ExperimentalGraph.from_index_edges((3, 3), [(p, s) for p, s in zip(pairs, [-1, 1, -1, 1, -1, 1])])
    strat = cycle_strategy_for(g)
    assert bell_value(g, correlators_from_strategy(g, strat)) == pytest.approx(cycle_tsirelson(3), abs=1e-9)


def test_align_rejects_frustrated_pattern():
    with pytest.raises(QuantumError):
        align_to_graph(cycle_graph(2, negatives=[]), cycle_strategy(2))


def test_cycle_strategy_for_rejects_non_cycle(g23):
    with pytest.raises(GraphError):
        cycle_strategy_for(g23)


def test_optimizer_chsh(chsh):
    strat, value = optimize_planar_strategy(chsh, resolution=720, sweeps=50)
    assert value >= 2 * math.sqrt(2) - 1e-3
    assert value <= ns_bound(chsh) + 1e-9
    assert bell_value(chsh, correlators_from_strategy(chsh, strat)) == pytest.approx(value, abs=1e-12)


def test_optimizer_g23(g23):
    _, value = optimize_planar_strategy(g23, resolution=720, sweeps=50)
    assert value >= 3 * math.sqrt(2) - 1e-2
    # planar singlet optimum: 2|a1+a2| + |a1-a2| peaks at a1.a2 = 0.6, giving 2*sqrt(5)
    assert value <= 2 * math.sqrt(5) + 1e-9


def test_optimizer_sixcycle(sixcycle):
    _, value = optimize_planar_strategy(sixcycle, resolution=720, sweeps=50)
    assert value >= 6 * math.cos(math.pi / 6) - 1e-3


def test_optimizer_is_reproducible(g23):
    s1, v1 = optimize_planar_strategy(g23, 360, 20, seed=5)
    s2, v2 = optimize_planar_strategy(g23, 360, 20, seed=5)
    assert v1 == v2
    assert s1.to_dict() == s2.to_dict()


def test_optimizer_seeded_with_deterministic_assignment(g23):
    lhv, assignment = lhv_bound(g23)
    start = angles_from_assignment(assignment.values)
    seeded = {v: planar_observable(t) for v, t in start.items()}
    assert bell_value(g23, correlators_from_strategy(g23, QuantumStrategy(singlet(), seeded))) == pytest.approx(lhv)
    # no sweeps, no random restarts: the seed itself comes back
    _, value = optimize_planar_strategy(g23, 720, 0, restarts=0, initial=start)
    assert value == pytest.approx(lhv, abs=1e-12)
    _, value = optimize_planar_strategy(g23, 7, 3, restarts=0, initial=start)
    assert value >= lhv - 1e-12


def test_optimizer_rejects_multiparty():
    g = ExperimentalGraph.from_index_edges((1, 1, 1), [((0, 0, 0), 1)])
    with pytest.raises(GraphError):
        optimize_planar_strategy(g)


def test_strategy_json_round_trip():
    strat = cycle_strategy(3)
    back = QuantumStrategy.from_dict(strat.to_dict())
    assert back.to_dict() == strat.to_dict()
    g = QuantumStrategy(ghz(3), {(k, 0): Observable(PAULI_X) for k in range(3)})
    back = QuantumStrategy.from_dict(g.to_dict())
    np.testing.assert_allclose(back.state.amplitudes, ghz(3).amplitudes)
    np.testing.assert_allclose(back.observables[(1, 0)].matrix, PAULI_X)


@settings(max_examples=25)
@given(st.lists(st.floats(0, 2 * math.pi), min_size=6, max_size=6))
def test_random_planar_strategies_below_ns(angles):
    g = cycle_graph(3)
    strat = QuantumStrategy(singlet(), {v: planar_observable(t) for v, t in zip(g.vertices(), angles)})
    assert bell_value(g, correlators_from_strategy(g, strat)) <= ns_bound(g) + 1e-9
