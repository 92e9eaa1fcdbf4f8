import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainscope.graphsearch import (
    chromatic_number,
    components,
    greedy_coloring,
    max_independent_set,
)
from chainscope.model import CapacityError

import oracles


def random_graph(seed, n, p):
    rng = np.random.default_rng(seed)
    adj = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                adj[a] |= 1 << b
                adj[b] |= 1 << a
    return adj


def is_independent(adj, vs):
    return all(not (adj[a] >> b) & 1 for a in vs for b in vs if a != b)


def test_small_cases():
    assert max_independent_set([]) == []
    assert max_independent_set([0, 0, 0]) == [0, 1, 2]
    triangle = [0b110, 0b101, 0b011]
    assert len(max_independent_set(triangle)) == 1
    assert chromatic_number(triangle) == 3
    path = [0b10, 0b101, 0b10]
    assert max_independent_set(path) == [0, 2]
    assert chromatic_number(path) == 2


def test_components():
    adj = [0b10, 0b01, 0, 0b10000, 0b01000]
    assert components(adj) == [0b11, 0b100, 0b11000]


def test_cycle_five():
    adj = [(1 << ((i + 1) % 5)) | (1 << ((i - 1) % 5)) for i in range(5)]
    assert len(max_independent_set(adj)) == 2
    assert chromatic_number(adj) == 3


def test_budget_exhaustion():
    adj = random_graph(3, 40, 0.5)
    with pytest.raises(CapacityError):
        max_independent_set(adj, budget=5)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 11), st.floats(0.1, 0.9))
def test_mis_matches_exhaustive(seed, n, p):
    adj = random_graph(seed, n, p)
    mis = max_independent_set(adj)
    assert is_independent(adj, mis)
    assert len(mis) == oracles.independence_number(adj)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.floats(0.1, 0.9))
def test_colouring_matches_exhaustive(seed, n, p):
    adj = random_graph(seed, n, p)
    colours = greedy_coloring(adj)
    assert all(colours[a] != colours[b] for a in range(n) for b in range(n)
               if (adj[a] >> b) & 1)
    chi = chromatic_number(adj)
    assert chi == oracles.chromatic(adj)
    assert chi <= max(colours) + 1
