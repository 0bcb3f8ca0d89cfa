import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from toposl.errors import IncompleteProjectors
from toposl.graph import max_degree
from toposl.quantum import (
    basis_projectors,
    hopping_hamiltonian,
    isolated_projective,
    measured_walk_simulate,
    random_density,
    random_hermitian,
)
from toposl.quantum.isolated import check_projectors, projective_graph


def _random_partition(rng, d):
    U = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    cuts = np.sort(rng.choice(np.arange(1, d), size=int(rng.integers(1, d)), replace=False))
    blocks = np.split(np.arange(d), cuts)
    return [U[:, b] @ U[:, b].conj().T for b in blocks]


@given(st.integers(0, 10_000), st.integers(2, 6))
def test_flows_match_population_derivative(seed, d):
    rng = np.random.default_rng(seed)
    H = random_hermitian(d, rng)
    P = _random_partition(rng, d)
    rho = random_density(d, rng)
    snap = isolated_projective(H, P, rho)
    g = projective_graph(H, P)
    drho = -1j * (H @ rho - rho @ H)
    xdot = np.array([np.real(np.trace(p @ drho)) for p in P])
    assert snap.flow.divergence(g) == pytest.approx(xdot, abs=1e-10)
    bound = math.sqrt(max_degree(g)) * snap.energy_fluctuation if g.edges else 0.0
    assert np.abs(snap.flow.edge).sum() <= bound + 1e-9


def test_fluctuation_uses_shifted_projected_state(rng):
    H = random_hermitian(3, rng)
    P = basis_projectors(3)
    rho = random_density(3, rng)
    snap = isolated_projective(H, P, rho)
    rt = np.diag(np.diag(rho))
    mean = np.real(np.trace(H @ rt))
    Hs = H - mean * np.eye(3)
    expect = math.sqrt(np.real(np.trace(Hs @ Hs @ rt)))
    assert snap.energy_fluctuation == pytest.approx(expect)


def test_projector_checks():
    with pytest.raises(IncompleteProjectors):
        check_projectors([np.diag([1.0, 0.0])])
    with pytest.raises(IncompleteProjectors):
        check_projectors([np.diag([0.5, 0.5]), np.diag([0.5, 0.5])])
    check_projectors(basis_projectors(4))


def test_hopping_hamiltonian():
    H = hopping_hamiltonian([1.0, 2.0])
    assert H.tolist() == [[0, 1, 0], [1, 0, 2], [0, 2, 0]]


def test_measured_walk_first_segment_matches_unitary():
    N, dt = 5, 0.3
    traj, rep = measured_walk_simulate(N, 1.0, dt, 3, substeps=16)
    H = hopping_hamiltonian(np.ones(N - 1))
    U = expm(-1j * H * dt)
    psi = U[:, 0]
    x1 = np.abs(psi) ** 2
    k = int(np.argmin(np.abs(traj.times - dt)))
    assert traj.measures[k] == pytest.approx(x1, abs=1e-12)
    assert rep.holds()
    assert len(rep.segment_distance) == 3
    assert traj.measures.sum(axis=1) == pytest.approx(np.ones(len(traj)))


@pytest.mark.parametrize("K,dt", [(1, 0.5), (10, 0.1), (30, 0.05)])
def test_measured_walk_bounds(K, dt):
    _, rep = measured_walk_simulate(6, [1.0, 0.5, 2.0, 1.0, 0.7], dt, K)
    assert rep.holds()
    assert rep.tau_bound_fluctuation <= rep.tau_bound_velocity * (1 + 1e-6) <= rep.tau * (1 + 1e-6) ** 2
    assert rep.tau == pytest.approx(K * dt)


def test_measured_walk_validation():
    with pytest.raises(ValueError):
        measured_walk_simulate(1, 1.0, 0.1, 3)
    with pytest.raises(ValueError):
        measured_walk_simulate(4, 1.0, 0.1, 3, substeps=3)
