import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl.dynamics import (
    BoundReport,
    FlowField,
    discretized_transport_check,
    evolve,
    make_report,
    observable_bound,
    speed_limit_report,
    velocity,
)
from toposl.errors import ExternalFlowsPresent, NegativeMassBlowup
from toposl.flowgen import random_flow_system
from toposl.graph import chain, cycle
from toposl.transport import distance


def master_equation(g, k):
    E = np.array(g.edges)

    def gen(t, x):
        return FlowField(np.zeros(g.n), k * (x[E[:, 1]] - x[E[:, 0]]))

    return gen


def test_velocity_definition():
    f = FlowField(np.array([1.0, -2.0]), np.array([-0.5]))
    assert velocity(f) == 0.5
    assert velocity(f, 2.0) == pytest.approx(6.5)


def test_flowfield_from_dict_antisymmetric():
    g = chain(3)
    f = FlowField.from_dict(g, {(1, 0): 2.0, (1, 2): -1.0})
    assert list(f.edge) == [-2.0, -1.0]
    assert f.as_dict(g) == {(0, 1): -2.0, (1, 2): -1.0}


def test_two_state_relaxation_matches_closed_form():
    """x1' = k (x2 - x1): x1(t) = 1/2 (1 + e^{-2kt}) from x = (1, 0)."""
    g, k = chain(2), 1.3
    traj = evolve(g, master_equation(g, k), [1.0, 0.0], 1.0, 2000)
    t = traj.times
    assert np.allclose(traj.measures[:, 0], 0.5 * (1 + np.exp(-2 * k * t)), atol=1e-11)
    # monotone flow on a single edge: the bound is saturated
    rep = speed_limit_report(traj)
    assert rep.saturation_ratio == pytest.approx(1.0, abs=1e-6)


def test_matrix_exponential_oracle():
    from scipy.linalg import expm

    g = cycle(5)
    k = 0.7
    L = np.zeros((5, 5))
    for i, j in g.edges:
        L[i, j] += k
        L[j, i] += k
        L[i, i] -= k
        L[j, j] -= k
    x0 = np.array([0.5, 0.2, 0.1, 0.1, 0.1])
    traj = evolve(g, master_equation(g, k), x0, 1.5, 1500)
    assert np.allclose(traj.measures[-1], expm(1.5 * L) @ x0, atol=1e-10)


def test_mass_conserved_without_external_flows():
    rng = np.random.default_rng(0)
    for _ in range(5):
        sys_ = random_flow_system(rng, external=False)
        traj = sys_.simulate(400)
        assert np.allclose(traj.measures.sum(axis=1), traj.measures[0].sum(), atol=1e-12)


def test_master_inequality_random_systems():
    rng = np.random.default_rng(7)
    for _ in range(10):
        sys_ = random_flow_system(rng, n_max=6)
        traj = sys_.simulate(300)
        for lam in sys_.admissible_lambdas():
            rep = speed_limit_report(traj, lam)
            assert rep.holds()
            lhs, rhs = discretized_transport_check(traj, lam, stride=10)
            assert distance(traj.graph, traj.measures[0], traj.measures[-1], lam) <= lhs + 1e-9
            assert lhs <= rhs * (1 + 1e-3)


@given(st.integers(0, 10_000))
def test_observable_bound_property(seed):
    rng = np.random.default_rng(seed)
    sys_ = random_flow_system(rng, n_max=5)
    traj = sys_.simulate(200)
    o = rng.normal(size=traj.graph.n)
    for lam in (0.5, 2.0):
        assert observable_bound(traj, o, lam).holds()


def test_inf_lambda_rejects_external_flows():
    rng = np.random.default_rng(1)
    sys_ = random_flow_system(rng, external=True)
    traj = sys_.simulate(50)
    with pytest.raises(ExternalFlowsPresent):
        speed_limit_report(traj, math.inf)


def test_negative_mass_blowup():
    g = chain(2)

    def drain(t, x):
        return FlowField(np.array([-5.0, 0.0]), np.zeros(1))

    with pytest.raises(NegativeMassBlowup):
        evolve(g, drain, [1.0, 0.0], 1.0, 100)


def test_report_json_roundtrip():
    rep = make_report(2.0, math.inf, 1.0, 1.0)
    d = json.loads(rep.to_json())
    assert set(d) == {"tau", "lambda", "distance", "avg_velocity", "tau_bound", "saturation_ratio"}
    assert d["lambda"] == "inf"
    assert BoundReport.from_dict(d) == rep
    assert rep.tau_bound == 1.0 and rep.saturation_ratio == 0.5


def test_report_edge_cases():
    assert make_report(1.0, 1.0, 0.0, 0.0).tau_bound == 0.0
    assert math.isinf(make_report(1.0, 1.0, 1.0, 0.0).tau_bound)


def test_subsample_keeps_endpoints():
    g = chain(2)
    traj = evolve(g, master_equation(g, 1.0), [1.0, 0.0], 1.0, 10)
    sub = traj.subsample(3)
    assert sub.times[0] == 0.0 and sub.times[-1] == 1.0
    w = traj.window(2, 5)
    assert len(w) == 4
