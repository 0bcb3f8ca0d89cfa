"""Driven open systems: energy-level populations under a local Lindblad equation.

The static Hamiltonian ``H`` must be nondegenerate; populations are taken
in its eigenbasis.  A drive ``V(t)`` creates external flows, and jump pairs
obeying local detailed balance create edge flows between levels.
"""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import FlowField
from ..errors import DegenerateSpectrum, InvariantViolation, UnpairedJump
from ..graph import Graph
from ..numerics import safe_log, trace_norm
from .core import (
    Jump,
    QuantumFlowSnapshot,
    QuantumModel,
    activity,
    energy_fluctuation,
    environment_entropy_rate,
    lindblad_rhs,
    random_hermitian,
    random_unitary,
    run_model,
)

GAP_TOL = 1e-9


def open_system_model(H, jumps, drive=None, rate_tol: float = 1e-12) -> QuantumModel:
    """Build the model ``-i[H + V(t), rho] + sum_k D[L_k] rho``.

    ``drive`` is a constant Hermitian matrix, a callable ``t -> matrix``, or
    ``None``.  Every jump must declare a partner and entropy change.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    energies, basis = np.linalg.eigh(H)
    if d > 1 and np.min(np.diff(energies)) < GAP_TOL:
        raise DegenerateSpectrum(f"energy gap {np.min(np.diff(energies)):.3e} below {GAP_TOL:g}")
    jumps = tuple(jumps)
    for k, j in enumerate(jumps):
        if j.partner is None or j.entropy is None:
            raise UnpairedJump(f"jump {k} has no declared partner")
    if drive is None:
        V = lambda t: np.zeros((d, d), dtype=complex)  # noqa: E731
    elif callable(drive):
        V = drive
    else:
        Vc = np.asarray(drive, dtype=complex)
        V = lambda t: Vc  # noqa: E731

    def hamiltonian(t):
        return H + V(t)

    # rates[k, m, n] = |<e_m|L_k|e_n>|^2
    rates = np.array([np.abs(basis.conj().T @ j.op @ basis) ** 2 for j in jumps]).reshape(len(jumps), d, d)
    total = rates.sum(axis=0)
    edges = [(m, n) for m in range(d) for n in range(m + 1, d)
             if total[m, n] > rate_tol or total[n, m] > rate_tol]
    g = Graph(d, edges)

    def measure(rho):
        return np.real(np.einsum("im,ij,jm->m", basis.conj(), rho, basis))

    model = QuantumModel(d, hamiltonian, jumps, g, measure, "open",
                         {"H0": H, "V": V, "basis": basis, "energies": energies, "rates": rates})
    model.check_pairs()
    return model


def level_jump_pair(basis, m: int, n: int, rate_fwd: float, rate_bwd: float) -> tuple[Jump, Jump]:
    """``sqrt(rate_fwd)|e_m><e_n|`` and its reverse, with ``s = ln(rate_fwd/rate_bwd)``."""
    em, en = basis[:, m], basis[:, n]
    s = math.log(rate_fwd / rate_bwd)
    fwd = Jump(math.sqrt(rate_fwd) * np.outer(em, en.conj()), direction=+1, entropy=s)
    bwd = Jump(math.sqrt(rate_bwd) * np.outer(en, em.conj()), direction=-1, entropy=-s)
    return fwd, bwd


def pair_up(pairs) -> list[Jump]:
    """Flatten ``(forward, backward)`` pairs and fill in partner indices."""
    out: list[Jump] = []
    for a, b in pairs:
        k = len(out)
        out.append(Jump(a.op, a.site, a.direction, a.entropy, k + 1))
        out.append(Jump(b.op, b.site, b.direction, b.entropy, k))
    return out


def random_open_system(d: int, rng: np.random.Generator, n_pairs: int | None = None,
                       drive_scale: float = 1.0) -> QuantumModel:
    """Nondegenerate random ``H`` with random level-to-level jump pairs and a random drive."""
    energies = np.sort(rng.uniform(-2, 2, size=d))
    while d > 1 and np.min(np.diff(energies)) < 1e-3:
        energies = np.sort(rng.uniform(-2, 2, size=d))
    W = random_unitary(d, rng)
    H = W @ np.diag(energies) @ W.conj().T
    H = 0.5 * (H + H.conj().T)
    _, basis = np.linalg.eigh(H)
    pairs_all = [(m, n) for m in range(d) for n in range(m + 1, d)]
    n_pairs = len(pairs_all) if n_pairs is None else min(n_pairs, len(pairs_all))
    chosen = rng.choice(len(pairs_all), size=n_pairs, replace=False) if pairs_all else []
    pairs = [level_jump_pair(basis, *pairs_all[c], *rng.uniform(0.1, 2.0, size=2)) for c in sorted(chosen)]
    V = random_hermitian(d, rng, drive_scale)
    return open_system_model(H, pair_up(pairs), V)


def open_system_flows(model: QuantumModel, rho, t: float = 0.0, check: bool = True) -> QuantumFlowSnapshot:
    """Level populations, drive flows ``f_n`` and jump flows ``f_nm``.

    With ``check`` the two trace-norm inequalities for the drive flows and
    the entropy-activity inequality for the jump flows are enforced.
    """
    rho = np.asarray(rho)
    basis = model.data["basis"]
    rates = model.data["rates"]
    V = np.asarray(model.data["V"](t), dtype=complex)
    x = model.x(rho)
    R = rates.sum(axis=0)  # R[n, m]: total rate m -> n
    g = model.graph
    edge = np.array([R[n, m] * x[m] - R[m, n] * x[n] for n, m in g.edges])
    comm = V @ rho - rho @ V
    comm_e = basis.conj().T @ comm @ basis
    ext = np.real(-1j * np.diag(comm_e))
    drho = lindblad_rhs(model, rho, t)
    xdot = np.real(np.einsum("im,ij,jm->m", basis.conj(), drho, basis))
    lnx = safe_log(x)
    s_pop = float(-(xdot * lnx).sum() - np.real(1j * np.diag(comm_e) @ lnx))
    s_env = environment_entropy_rate(model, rho)
    a = activity(model, rho)
    dV = energy_fluctuation(rho, V)
    snap = QuantumFlowSnapshot(measure=x, flow=FlowField(ext, edge), sigma=s_pop + s_env, activity=a,
                               sigma_env=s_env, sigma_pop=s_pop, energy_fluctuation=dV)
    if check:
        lhs, mid, rhs = drive_flow_chain(snap, comm)
        if lhs > mid + 1e-9 or mid > rhs + 1e-9:
            raise InvariantViolation(f"drive flow chain broken: {lhs!r} <= {mid!r} <= {rhs!r}")
        e_lhs, e_rhs = jump_flow_bound(snap)
        if e_lhs > e_rhs + 1e-9:
            raise InvariantViolation(f"jump flows {e_lhs!r} exceed entropy-activity bound {e_rhs!r}")
    return snap


def drive_flow_chain(snapshot: QuantumFlowSnapshot, comm) -> tuple[float, float, float]:
    """``(sum_n |f_n|, ||[V, rho]||_1, 2 Delta_rho V)``."""
    return (float(np.abs(snapshot.flow.external).sum()), trace_norm(comm),
            2.0 * snapshot.energy_fluctuation)


def jump_flow_bound(snapshot: QuantumFlowSnapshot) -> tuple[float, float]:
    """``(sum_edges |f_nm|, sqrt((sigma_pop + sigma_env) a / 2))``."""
    return (float(np.abs(snapshot.flow.edge).sum()),
            math.sqrt(max(snapshot.sigma * snapshot.activity, 0.0) / 2.0))


def open_velocity_bound(snapshot: QuantumFlowSnapshot, lam: float) -> float:
    """``2 lam Delta_rho V + sqrt((sigma_pop + sigma_env) a / 2)``."""
    return 2.0 * lam * snapshot.energy_fluctuation + jump_flow_bound(snapshot)[1]


def simulate_open(model: QuantumModel, rho0, tau: float, steps: int, check: bool = True):
    return run_model(model, rho0, tau, steps, lambda r, t: open_system_flows(model, r, t, check))
