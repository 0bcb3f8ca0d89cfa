import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl.dynamics import speed_limit_report, velocity
from toposl.errors import DegenerateSpectrum, UnpairedJump
from toposl.quantum import (
    drive_flow_chain,
    jump_flow_bound,
    lindblad_rhs,
    open_system_flows,
    open_system_model,
    random_density,
    random_open_system,
    simulate_open,
)
from toposl.quantum.core import Jump
from toposl.quantum.open_system import level_jump_pair, open_velocity_bound, pair_up


@given(st.integers(0, 10_000), st.integers(2, 6))
def test_flows_match_level_population_derivative(seed, d):
    rng = np.random.default_rng(seed)
    model = random_open_system(d, rng)
    rho = random_density(d, rng)
    snap = open_system_flows(model, rho, 0.0)
    basis = model.data["basis"]
    drho = lindblad_rhs(model, rho)
    xdot = np.real(np.diag(basis.conj().T @ drho @ basis))
    assert snap.flow.divergence(model.graph) == pytest.approx(xdot, abs=1e-10)


@given(st.integers(0, 10_000), st.integers(2, 6), st.sampled_from([0.5, 1.0, 2.0]))
def test_drive_chain_and_entropy_bound(seed, d, lam):
    rng = np.random.default_rng(seed)
    model = random_open_system(d, rng)
    rho = random_density(d, rng)
    snap = open_system_flows(model, rho, 0.0, check=False)
    V = model.data["V"](0.0)
    lhs, mid, rhs = drive_flow_chain(snap, V @ rho - rho @ V)
    assert lhs <= mid + 1e-9 and mid <= rhs + 1e-9
    e_lhs, e_rhs = jump_flow_bound(snap)
    assert e_lhs <= e_rhs + 1e-9
    assert snap.sigma >= -1e-9
    assert velocity(snap.flow, lam) <= open_velocity_bound(snap, lam) + 1e-9


def test_undriven_populations_follow_rate_equation(rng):
    d = 3
    H = np.diag([0.0, 1.0, 2.5])
    basis = np.eye(d)
    pairs = [level_jump_pair(basis, 0, 1, 1.0, 0.5), level_jump_pair(basis, 1, 2, 0.7, 0.2)]
    model = open_system_model(H, pair_up(pairs))
    rho = np.diag([0.2, 0.5, 0.3]).astype(complex)
    snap = open_system_flows(model, rho)
    # f_01 = k(1->0) x_1 - k(0->1) x_0 with k(1->0) = 1.0, k(0->1) = 0.5
    assert snap.flow.edge[0] == pytest.approx(1.0 * 0.5 - 0.5 * 0.2)
    assert np.all(snap.flow.external == 0)


def test_trajectory_bounds(rng):
    model = random_open_system(4, rng)
    run = simulate_open(model, random_density(4, rng), 1.0, 800)
    for lam in (0.5, 1.0, 2.0):
        assert speed_limit_report(run.trajectory, lam).holds()
    assert run.max_trace_error < 1e-7


def test_degenerate_and_unpaired():
    with pytest.raises(DegenerateSpectrum):
        open_system_model(np.eye(2), [])
    L = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(UnpairedJump):
        open_system_model(np.diag([0.0, 1.0]), [Jump(L)])


def test_level_jump_pair_detailed_balance():
    fwd, bwd = level_jump_pair(np.eye(2), 0, 1, 2.0, 0.5)
    assert fwd.entropy == pytest.approx(math.log(4.0))
    assert np.allclose(fwd.op, math.exp(fwd.entropy / 2) * bwd.op.conj().T)
