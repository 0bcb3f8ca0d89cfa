import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from toposl.graph import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def connected_graphs(draw, n_min=1, n_max=12):
    """Random spanning tree plus random extra edges."""
    n = draw(st.integers(n_min, n_max))
    edges = set()
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        edges.add((u, v))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    if pairs:
        extra = draw(st.lists(st.sampled_from(pairs), max_size=min(len(pairs), 2 * n), unique=True))
        edges.update(extra)
    return Graph(n, edges)


@st.composite
def graph_and_measures(draw, n_max=10, balanced=True, allow_zero=True):
    g = draw(connected_graphs(1, n_max))
    # exact zeros or masses well above the 1e-9 balance tolerance; subnormal
    # masses would overflow the rescaling below
    elems = st.floats(1e-6 if allow_zero else 0.05, 3.0, allow_nan=False, allow_infinity=False)
    if allow_zero:
        elems = st.one_of(st.just(0.0), elems)
    a = np.array(draw(st.lists(elems, min_size=g.n, max_size=g.n)))
    b = np.array(draw(st.lists(elems, min_size=g.n, max_size=g.n)))
    if a.sum() == 0:
        a[0] = 1.0
    if b.sum() == 0:
        b[-1] = 1.0
    if balanced:
        b = b * (a.sum() / b.sum())
    return g, a, b


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
