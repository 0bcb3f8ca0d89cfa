"""Ferromagnetic Heisenberg spin networks used as quantum communication channels.

Local basis: index 0 is ``|0>`` (spin down) and index 1 is ``|1>`` (spin
up), so ``sigma_z = diag(-1, 1)``.  ``sigma_y`` is chosen to keep
``[sigma_x, sigma_y] = 2i sigma_z``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from ..dynamics import FlowField, velocity
from ..errors import InvariantViolation
from ..graph import Graph, chain, max_degree
from .core import DIM_CAP, QuantumFlowSnapshot, QuantumModel, check_dimension, energy_fluctuation, run_model

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)


def embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    eye = np.eye(2)
    return reduce(np.kron, [op if k == site else eye for k in range(n)])


def spin_chain_model(N: int, gamma: float, field=None, graph: Graph | None = None,
                     cap: int = DIM_CAP) -> QuantumModel:
    """``-(gamma/2) sum_edges sigma_n . sigma_m + sum_n B_n(t) sigma_n^z``.

    ``field(t)`` returns the ``N`` local fields; ``None`` means zero field.
    ``graph`` defaults to the open chain.
    """
    if N < 2:
        raise ValueError("spin network needs N >= 2")
    g = graph or chain(N)
    if g.n != N:
        raise ValueError("graph size does not match N")
    check_dimension(2 ** N, cap)
    sx = [embed(SX, k, N) for k in range(N)]
    sy = [embed(SY, k, N) for k in range(N)]
    sz = [embed(SZ, k, N) for k in range(N)]
    H0 = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for n, m in g.edges:
        H0 -= 0.5 * gamma * (sx[n] @ sx[m] + sy[n] @ sy[m] + sz[n] @ sz[m])
    zdiag = np.array([np.real(np.diag(z)) for z in sz])
    # ordered so that dx_n/dt = sum_m f_nm under this Pauli algebra
    currents = {(n, m): 0.5 * gamma * (sx[n] @ sy[m] - sy[n] @ sx[m]) for n, m in g.edges}

    if field is None:
        hamiltonian = H0
    else:
        def hamiltonian(t):
            b = np.asarray(field(t), dtype=float)
            return H0 + np.diag(b @ zdiag)

    def measure(rho):
        return 0.5 * (zdiag @ np.real(np.diag(rho)) + 1.0)

    return QuantumModel(2 ** N, hamiltonian, (), g, measure, "spin",
                        {"gamma": float(gamma), "currents": currents, "H0": H0, "zdiag": zdiag})


def excitation_state(N: int, site: int = 0) -> np.ndarray:
    """``|0...1...0>`` with the single up spin at ``site``."""
    idx = 1 << (N - 1 - site)
    rho = np.zeros((2 ** N, 2 ** N), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def spin_flows(model: QuantumModel, rho, t: float = 0.0) -> QuantumFlowSnapshot:
    rho = np.asarray(rho)
    cur = model.data["currents"]
    edge = np.array([np.real(np.sum(cur[e].T * rho)) for e in model.graph.edges])
    return QuantumFlowSnapshot(
        measure=model.x(rho),
        flow=FlowField(np.zeros(model.graph.n), edge),
        energy_fluctuation=energy_fluctuation(rho, model.hamiltonian_at(t)),
    )


def spin_velocity_bound(model: QuantumModel, snapshot: QuantumFlowSnapshot, check: bool = False) -> float:
    """``gamma d_G ||x_t||_1``."""
    bound = model.data["gamma"] * max_degree(model.graph) * float(np.abs(snapshot.measure).sum())
    if check:
        v = velocity(snapshot.flow)
        if v > bound + 1e-9:
            raise InvariantViolation(f"spin velocity {v!r} exceeds bound {bound!r}")
    return bound


def transfer_time_bound(N: int, gamma: float) -> float:
    """Minimum time to move one excitation across an open chain of ``N`` spins."""
    return (N - 1) / (2.0 * gamma)


def piecewise_constant_field(values, duration: float):
    """Field ``values[p]`` on the ``p``-th of ``len(values)`` equal pieces of ``[0, duration]``."""
    values = np.asarray(values, dtype=float)
    P = values.shape[0]

    def field(t):
        p = min(int(t / duration * P), P - 1)
        return values[max(p, 0)]

    return field


def simulate_spin(model: QuantumModel, rho0, tau: float, steps: int):
    return run_model(model, rho0, tau, steps, lambda r, t: spin_flows(model, r, t), check_every=10)
