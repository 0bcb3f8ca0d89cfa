import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl.dynamics import speed_limit_report, velocity
from toposl.graph import chain, star
from toposl.quantum import (
    excitation_state,
    lindblad_rhs,
    piecewise_constant_field,
    random_density,
    simulate_spin,
    spin_chain_model,
    spin_flows,
    spin_velocity_bound,
    transfer_time_bound,
)
from toposl.quantum.spin import SX, SY, SZ, embed
from toposl.transport import distance


def test_pauli_algebra():
    assert np.allclose(SX @ SY - SY @ SX, 2j * SZ)
    assert np.allclose(SY @ SZ - SZ @ SY, 2j * SX)
    for s in (SX, SY, SZ):
        assert np.allclose(s @ s, np.eye(2))


def test_embed_commutes_across_sites():
    a, b = embed(SX, 0, 3), embed(SY, 2, 3)
    assert np.allclose(a @ b, b @ a)


def test_excitation_state_measure():
    for N in (2, 3, 5):
        for k in range(N):
            model = spin_chain_model(N, 1.0)
            x = model.x(excitation_state(N, k))
            assert x == pytest.approx(np.eye(N)[k])


def test_two_spin_rabi_oscillation():
    """One excitation on two sites moves as x_2(t) = sin^2(gamma t)."""
    gamma = 0.9
    model = spin_chain_model(2, gamma)
    run = simulate_spin(model, excitation_state(2, 0), 2.0, 2000)
    t = run.trajectory.times
    assert np.allclose(run.trajectory.measures[:, 1], np.sin(gamma * t) ** 2, atol=1e-10)


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_flows_reproduce_population_change(seed, N):
    rng = np.random.default_rng(seed)
    model = spin_chain_model(N, float(rng.uniform(0.3, 2)), lambda t: np.linspace(-1, 1, N))
    rho = random_density(2 ** N, rng)
    snap = spin_flows(model, rho, 0.3)
    # x is affine in rho, so difference against x(0) for the derivative
    xdot = model.x(lindblad_rhs(model, rho, 0.3)) - model.x(0 * rho)
    assert snap.flow.divergence(model.graph) == pytest.approx(xdot, abs=1e-10)
    assert velocity(snap.flow) <= spin_velocity_bound(model, snap) + 1e-9


def test_star_graph_flows_and_bound(rng):
    model = spin_chain_model(4, 1.0, graph=star(4))
    rho = random_density(16, rng)
    snap = spin_flows(model, rho)
    xdot = model.x(lindblad_rhs(model, rho)) - model.x(0 * rho)
    assert snap.flow.divergence(model.graph) == pytest.approx(xdot, abs=1e-10)
    assert velocity(snap.flow) <= spin_velocity_bound(model, snap) + 1e-9


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_no_early_transfer(N):
    rng = np.random.default_rng(N)
    T = transfer_time_bound(N, 1.0)
    field = piecewise_constant_field(rng.uniform(-2, 2, (3, N)), T)
    model = spin_chain_model(N, 1.0, field)
    run = simulate_spin(model, excitation_state(N, 0), T, 1000)
    target = np.eye(N)[N - 1]
    g = chain(N)
    for x in run.trajectory.measures[:-1]:
        assert distance(g, x, target) > 0.05
    assert speed_limit_report(run.trajectory).holds(1e-5)


def test_piecewise_field():
    f = piecewise_constant_field([[1.0], [2.0]], 2.0)
    assert f(0.0)[0] == 1.0 and f(0.99)[0] == 1.0 and f(1.0)[0] == 2.0 and f(2.0)[0] == 2.0


def test_bad_inputs():
    with pytest.raises(ValueError):
        spin_chain_model(1, 1.0)
    with pytest.raises(ValueError):
        spin_chain_model(3, 1.0, graph=chain(4))
    assert transfer_time_bound(6, 0.5) == 5.0


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_distance_to_point_mass_is_linear(seed, N):
    from toposl.graph import shortest_path_matrix

    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(N))
    hops = shortest_path_matrix(chain(N))[:, -1]
    assert x @ hops == pytest.approx(distance(chain(N), x, np.eye(N)[N - 1]), abs=1e-10)
