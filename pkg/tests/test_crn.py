import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl import crn
from toposl.dynamics import evolve, speed_limit_report
from toposl.errors import EmptyImbalance, NegativeConcentration, NetworkParseError, NonPositiveEntry, ZeroFlux
from toposl.transport import distance

TEXT = """
# dimerisation with an inflow
2 A + B <-> C , kf=1.5 , kb=0.5
0 <-> A , kf=0.3 , kb=0.2
C <-> 3 B , kf=0.7 , kb=0.1
"""


def test_parse_and_roundtrip():
    net = crn.ReactionNetwork.parse(TEXT)
    assert net.species == ("A", "B", "C")
    assert net.nu_plus.tolist() == [[2, 1, 0], [0, 0, 0], [0, 0, 1]]
    assert net.nu_minus.tolist() == [[0, 0, 1], [1, 0, 0], [0, 3, 0]]
    assert list(net.conservative) == [False, False, False]
    back = crn.ReactionNetwork.parse(net.to_text())
    assert np.array_equal(back.nu_plus, net.nu_plus) and np.array_equal(back.k_minus, net.k_minus)


@pytest.mark.parametrize("bad", ["A -> B , kf=1 , kb=1", "A <-> B , kf=1", "1.5 A <-> B , kf=1 , kb=1",
                                 "A <-> B , kf=x , kb=1", "A <-> B , rate=1", ""])
def test_parse_errors(bad):
    with pytest.raises(NetworkParseError):
        crn.ReactionNetwork.parse(bad)


def test_noop_channel_rejected():
    with pytest.raises(EmptyImbalance):
        crn.ReactionNetwork.parse("A <-> A , kf=1 , kb=1")
    with pytest.raises(ValueError):
        crn.ReactionNetwork.parse("A <-> B , kf=0 , kb=1")


def test_mass_action_by_hand():
    net = crn.ReactionNetwork.parse(TEXT)
    x = np.array([0.4, 1.1, 0.6])
    jp, jm, j = crn.fluxes(net, x)
    assert jp == pytest.approx([1.5 * 0.4 ** 2 * 1.1, 0.3, 0.7 * 0.6])
    assert jm == pytest.approx([0.5 * 0.6, 0.2 * 0.4, 0.1 * 1.1 ** 3])
    dx = crn.rate_derivative(net, x)
    # forward net rates push species along nu_minus - nu_plus
    r = jp - jm
    expect = np.array([-2 * r[0] + r[1], -r[0] + 3 * r[2], r[0] - r[2]])
    assert dx == pytest.approx(expect)
    with pytest.raises(NegativeConcentration):
        crn.fluxes(net, [-1.0, 0.0, 0.0])


def test_cascade_matches_matrix_exponential():
    from scipy.linalg import expm

    N, kf, kb = 6, 2.0, 1.0
    net = crn.cascade_network(N, kf, kb)
    A = np.zeros((N, N))
    for i in range(N - 1):
        A[i, i] -= kf
        A[i + 1, i] += kf
        A[i + 1, i + 1] -= kb
        A[i, i + 1] += kb
    x0 = np.linspace(1.0, 0.1, N)
    times, xs = crn.simulate(net, x0, 0.8, 800)
    assert np.allclose(xs[-1], expm(0.8 * A) @ x0, atol=1e-11)


def test_entropy_production_nonnegative_and_zero_at_equilibrium():
    net = crn.cascade_network(4, 2.0, 1.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert crn.entropy_production_rate(net, rng.uniform(0.01, 2, 4)) >= 0
    eq = np.array([1.0, 2.0, 4.0, 8.0])  # kf x_i = kb x_{i+1}
    assert crn.entropy_production_rate(net, eq) == pytest.approx(0.0, abs=1e-14)
    assert math.isinf(crn.entropy_production_rate(net, [1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(ZeroFlux):
        crn.entropy_production_rate(net, [1.0, 0.0, 0.0, 0.0], strict=True)


def test_greedy_split_worked_example():
    Z, a_used, b_used = crn.greedy_split([4, 5], [1, 2, 3])
    assert Z.tolist() == [[1, 2, 1], [0, 0, 2]]
    assert a_used.sum() == 6


@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=6),
       st.lists(st.floats(0.01, 10), min_size=1, max_size=6))
def test_greedy_split_properties(a, b):
    a, b = np.array(a), np.array(b)
    Z, a_used, b_used = crn.greedy_split(a, b)
    scale = max(a.sum(), b.sum())
    assert (Z >= 0).all()
    assert (a_used <= a + 1e-9 * scale).all() and (b_used <= b + 1e-9 * scale).all()
    assert a_used.sum() == pytest.approx(min(a.sum(), b.sum()), rel=1e-9)
    assert np.count_nonzero(Z) <= a.size + b.size - 1


def test_greedy_split_rejects_nonpositive():
    with pytest.raises(NonPositiveEntry):
        crn.greedy_split([1, 0], [1])


def test_transport_graph_quantities():
    net = crn.ReactionNetwork.parse(TEXT)
    tgd = crn.build_transport_graph(net)
    # 2A + B -> C: |gain| = 1, |loss| = 3
    assert tgd.chi[0] == 1 and tgd.eta[0] == 2
    # 0 -> A: pure creation
    assert tgd.chi[1] == 0 and tgd.eta[1] == 1
    # C -> 3B
    assert tgd.chi[2] == 1 and tgd.eta[2] == 2
    assert tgd.coefficients(0.5).tolist() == [2.0, 0.5, 2.0]
    with pytest.raises(ValueError):
        tgd.coefficients(math.inf)


def _random_network(rng, conservative=False):
    S = int(rng.integers(2, 5))
    R = int(rng.integers(1, 4))
    nup = np.zeros((R, S), dtype=int)
    num = np.zeros((R, S), dtype=int)
    for r in range(R):
        while np.array_equal(nup[r], num[r]):
            nup[r] = rng.integers(0, 3, S)
            num[r] = rng.integers(0, 3, S)
            if conservative:
                diff = nup[r].sum() - num[r].sum()
                k = int(rng.integers(0, S))
                if diff > 0:
                    num[r, k] += diff
                else:
                    nup[r, k] -= diff
    return crn.ReactionNetwork(nup, num, rng.uniform(0.2, 2, R), rng.uniform(0.2, 2, R),
                               tuple(f"S{i}" for i in range(S)))


@given(st.integers(0, 100_000))
def test_decomposition_reproduces_rate_equation(seed):
    rng = np.random.default_rng(seed)
    net = _random_network(rng)
    tgd = crn.build_transport_graph(net)
    x = rng.uniform(0.05, 2.0, net.n_species)
    flow = crn.decompose_flows(net, tgd, x)
    assert flow.divergence(tgd.graph) == pytest.approx(crn.rate_derivative(net, x), abs=1e-10)


@given(st.integers(0, 100_000), st.sampled_from([0.5, 1.0, 2.0]))
def test_velocity_bounded_by_weighted_current_and_sqrt_sigma_ell(seed, lam):
    rng = np.random.default_rng(seed)
    net = _random_network(rng)
    tgd = crn.build_transport_graph(net)
    x = rng.uniform(0.05, 2.0, net.n_species)
    flow = crn.decompose_flows(net, tgd, x)
    v = lam * np.abs(flow.external).sum() + np.abs(flow.edge).sum()
    wc = crn.weighted_current(net, x, lam, tgd)
    sig = crn.entropy_production_rate(net, x)
    ell = crn.kinetic_term(net, x, lam, tgd)
    assert v <= wc + 1e-9
    assert wc <= math.sqrt(sig * ell) * (1 + 1e-9) + 1e-12


@given(st.integers(0, 100_000))
def test_conservative_network_conserves_mass(seed):
    rng = np.random.default_rng(seed)
    net = _random_network(rng, conservative=True)
    assert net.conservative.all()
    x0 = rng.uniform(0.1, 1.0, net.n_species)
    _, xs = crn.simulate(net, x0, 0.5, 200)
    assert np.abs(xs.sum(axis=1) - x0.sum()).max() <= 1e-8 * max(1.0, x0.sum())


def test_random_network_bounds_hierarchy():
    rng = np.random.default_rng(5)
    for _ in range(8):
        net = _random_network(rng)
        x0 = rng.uniform(0.1, 1.0, net.n_species)
        # saturated channels leave only the O(h^2) quadrature error in tau - tau1
        for b in crn.crn_bounds_sweep(net, x0, [0.25, 0.5], 0.5, 1000):
            assert b.tau >= b.tau1 * (1 - 1e-6)
            assert b.tau1 >= b.tau2 * (1 - 1e-9)
            # tv = W_{1,1/2}, so tau3 sits below tau2 at lambda = 1/2
            assert b.tau2 >= b.tau3 * (1 - 1e-9)


def test_crn_flows_obey_master_inequality():
    rng = np.random.default_rng(9)
    net = _random_network(rng)
    tgd = crn.build_transport_graph(net)
    x0 = rng.uniform(0.1, 1.0, net.n_species)
    traj = evolve(tgd.graph, crn.flow_generator(net, tgd), x0, 0.5, 500)
    rep = speed_limit_report(traj, 1.0, allow_disconnected=True)
    assert rep.holds()


def test_cascade_sweep_saturates():
    net = crn.cascade_network(10, 2.0, 1.0)
    bounds = crn.crn_bounds_sweep(net, np.linspace(1, 0.1, 10), [0.25, 0.5, 1.0], math.inf, 2000)
    for b in bounds:
        assert b.hierarchy_holds()
        assert b.tau1 / b.tau >= 0.99
        assert b.tau3 < b.tau2
    assert set(bounds[0].to_dict()) == {"tau", "lambda", "tau1", "tau2", "tau3", "distance",
                                        "avg_weighted_current", "avg_sqrt_sigma_ell", "avg_sigma",
                                        "avg_ell", "avg_diffusion", "tv_distance"}


def test_sweep_rejects_off_grid_tau():
    net = crn.cascade_network(3, 2.0, 1.0)
    with pytest.raises(ValueError):
        crn.crn_bounds_sweep(net, [1, 0.5, 0.1], [0.33333, 1.0], math.inf, 10)


def test_zero_initial_concentrations_are_lifted():
    x = crn.prepare_initial_state([1.0, 0.0])
    assert x[1] == 1e-12


def test_cascade_distance_is_w1_on_chain():
    net = crn.cascade_network(5, 2.0, 1.0)
    tgd = crn.build_transport_graph(net)
    assert tgd.graph.edges == ((0, 1), (1, 2), (2, 3), (3, 4))
    b = crn.crn_bounds(net, np.linspace(1, 0.2, 5), 0.5, math.inf, 500)
    _, xs = crn.simulate(net, np.linspace(1, 0.2, 5), 0.5, 500)
    assert b.distance == pytest.approx(distance(tgd.graph, xs[0], xs[-1]), abs=1e-12)
