import itertools
import random

import pytest
from hypothesis import strategies as st

from bellcc.cli import bundled_path
from bellcc.graphs import ExperimentalGraph, load_graph

# Expected 6-cycle value table, typed in by hand: rows (x_B, y_B), columns (x_A, y_A).
SIXCYCLE_TABLE = [
    ["1", "-1", "1", "-1", "-", "-"],
    ["-1", "1", "-1", "1", "-", "-"],
    ["-", "-", "1", "-1", "1", "-1"],
    ["-", "-", "-1", "1", "-1", "1"],
    ["1", "-1", "-", "-", "-1", "1"],
    ["-1", "1", "-", "-", "1", "-1"],
]
SIXCYCLE_LABELS = ["(1,+1)", "(1,-1)", "(2,+1)", "(2,-1)", "(3,+1)", "(3,-1)"]


@pytest.fixture
def chsh():
    return load_graph(bundled_path("chsh.json"))


@pytest.fixture
def sixcycle():
    return load_graph(bundled_path("sixcycle.json"))


@pytest.fixture
def g23():
    return load_graph(bundled_path("g23.json"))


def random_graph(rng: random.Random, max_vertices: int = 10, parties: int | None = None) -> ExperimentalGraph:
    n = parties or rng.choice([2, 2, 2, 3])
    while True:
        counts = [rng.randint(1, 4) for _ in range(n)]
        if sum(counts) <= max_vertices:
            break
    tuples = list(itertools.product(*(range(m) for m in counts)))
    k = rng.randint(1, min(len(tuples), 12))
    chosen = rng.sample(tuples, k)
    return ExperimentalGraph.from_index_edges(counts, [(t, rng.choice([1, -1])) for t in chosen])


@st.composite
def graphs(draw, max_vertices: int = 10, parties=st.sampled_from([2, 3])):
    n = draw(parties)
    counts = draw(
        st.lists(st.integers(1, 4), min_size=n, max_size=n).filter(lambda c: sum(c) <= max_vertices)
    )
    tuples = list(itertools.product(*(range(m) for m in counts)))
    chosen = draw(st.lists(st.sampled_from(tuples), min_size=1, max_size=12, unique=True))
    signs = draw(st.lists(st.sampled_from([1, -1]), min_size=len(chosen), max_size=len(chosen)))
    return ExperimentalGraph.from_index_edges(counts, list(zip(chosen, signs)))
