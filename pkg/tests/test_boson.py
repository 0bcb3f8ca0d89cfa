import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl.dynamics import speed_limit_report, velocity
from toposl.graph import chain, complete, max_degree
from toposl.quantum import (
    boson_flows,
    boson_lattice_model,
    boson_velocity_bound,
    exchange_current_bound,
    fock_state,
    lindblad_rhs,
    random_density,
    simulate_boson,
    steady_state,
)
from toposl.quantum.boson import ladder, top_level_population


def test_ladder_algebra():
    b = ladder(4)
    n = b.T @ b
    assert np.allclose(np.diag(n), range(5))
    comm = b @ b.T - b.T @ b
    # [b, b^dagger] = 1 except on the truncated top level
    assert np.allclose(np.diag(comm)[:-1], 1.0)


def test_single_boson_hops_as_cos_squared():
    """One boson on two sites with hopping gamma: x_1(t) = cos^2(gamma t)."""
    gamma = 0.8
    model = boson_lattice_model(chain(2), gamma, n_max=1)
    run = simulate_boson(model, fock_state(model, [1, 0]), 2.0, 4000)
    t = run.trajectory.times
    assert np.allclose(run.trajectory.measures[:, 0], np.cos(gamma * t) ** 2, atol=1e-10)
    assert np.allclose(run.trajectory.measures.sum(axis=1), 1.0, atol=1e-12)


def test_isolated_lattice_conserves_number(rng):
    model = boson_lattice_model(complete(3), 1.0, U=0.7, mu=0.2, n_max=2)
    rho0 = random_density(model.dim, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run = simulate_boson(model, rho0, 1.0, 500)
    N = run.trajectory.measures.sum(axis=1)
    assert np.abs(N - N[0]).max() < 1e-8


def _open_model(rng, n_sites=2, n_max=2):
    g = chain(n_sites)
    return boson_lattice_model(g, float(rng.uniform(0.3, 1.5)), U=float(rng.uniform(0, 1)),
                               rate_in=rng.uniform(0.1, 1.0, n_sites), rate_out=rng.uniform(0.2, 1.5, n_sites),
                               n_max=n_max)


@given(st.integers(0, 10_000))
def test_flows_reproduce_population_change(seed):
    rng = np.random.default_rng(seed)
    model = _open_model(rng, int(rng.integers(1, 4)), 2)
    rho = random_density(model.dim, rng)
    snap = boson_flows(model, rho)
    xdot = model.x(lindblad_rhs(model, rho))
    # exact even under truncation: b^dagger b commutes with the on-site terms
    assert snap.flow.divergence(model.graph) == pytest.approx(xdot, abs=1e-10)


@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 2.0]))
def test_exchange_and_velocity_bounds(seed, lam):
    rng = np.random.default_rng(seed)
    model = _open_model(rng, int(rng.integers(1, 4)), 2)
    rho = random_density(model.dim, rng)
    snap = boson_flows(model, rho)
    lhs, rhs = exchange_current_bound(snap)
    assert lhs <= rhs + 1e-9
    bound = boson_velocity_bound(snap, model.data["gamma"], max_degree(model.graph), lam)
    assert velocity(snap.flow, lam) <= bound + 1e-9
    assert snap.sigma >= -1e-9


def test_steady_state_has_no_net_flow(rng):
    model = _open_model(rng, 2, 2)
    ss = steady_state(model)
    snap = boson_flows(model, ss)
    assert np.abs(snap.flow.divergence(model.graph)).max() < 1e-9


def test_trajectory_obeys_master_inequality(rng):
    model = _open_model(rng, 2, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run = simulate_boson(model, fock_state(model, [1, 0]), 1.0, 1000)
    for lam in (0.5, 1.0, 2.0):
        assert speed_limit_report(run.trajectory, lam).holds()
    assert run.max_trace_error < 1e-7 and run.min_eigenvalue > -1e-7


def test_truncation_warning():
    model = boson_lattice_model(chain(1), 1.0, rate_in=2.0, rate_out=0.1, n_max=1)
    with pytest.warns(RuntimeWarning, match="top Fock level"):
        simulate_boson(model, fock_state(model, [0]), 1.0, 100)
    assert top_level_population(model, fock_state(model, [1])) == 1.0


def test_fock_state_and_validation():
    model = boson_lattice_model(chain(2), 1.0, n_max=2)
    rho = fock_state(model, [2, 1])
    assert model.x(rho) == pytest.approx([2.0, 1.0])
    with pytest.raises(ValueError):
        fock_state(model, [3, 0])
    with pytest.raises(ValueError):
        boson_lattice_model(chain(2), 0.0)
    with pytest.raises(ValueError):
        boson_lattice_model(chain(2), 1.0, n_max=0)


def test_jump_pairs_carry_log_rate_ratio():
    model = boson_lattice_model(chain(1), 1.0, rate_in=0.5, rate_out=2.0, n_max=2)
    s = [j.entropy for j in model.jumps]
    assert s == pytest.approx([math.log(0.25), -math.log(0.25)])


def test_one_way_loss_has_infinite_entropy_production(rng):
    model = boson_lattice_model(chain(3), 1.0, rate_out=0.2)
    rho = random_density(model.dim, rng)
    snap = boson_flows(model, rho)
    assert snap.sigma_env == math.inf and snap.sigma == math.inf
    lhs, rhs = exchange_current_bound(snap)
    assert lhs > 0 and rhs == math.inf
    # vacuum: nothing to lose, so the one-way channel carries no traffic
    vac = fock_state(model, [0, 0, 0])
    assert boson_flows(model, vac).sigma_env == 0.0
