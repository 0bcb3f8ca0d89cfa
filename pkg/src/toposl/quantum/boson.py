"""Interacting bosons on a lattice exchanging particles with a reservoir."""

from __future__ import annotations

import math
from functools import reduce

import numpy as np

from ..dynamics import FlowField, velocity
from ..errors import InvariantViolation
from ..graph import Graph, max_degree
from .core import (
    DIM_CAP,
    Jump,
    QuantumFlowSnapshot,
    QuantumModel,
    activity,
    check_dimension,
    energy_fluctuation,
    environment_entropy_rate,
    lindblad_rhs,
    run_model,
    system_entropy_rate,
)

TRUNCATION_TOL = 1e-6


def ladder(n_max: int) -> np.ndarray:
    """Truncated annihilation operator on ``n_max + 1`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def site_operators(n_sites: int, n_max: int) -> list[np.ndarray]:
    """Annihilation operators ``b_i`` embedded in the full tensor product."""
    b = ladder(n_max)
    eye = np.eye(n_max + 1)
    return [reduce(np.kron, [b if k == i else eye for k in range(n_sites)]) for i in range(n_sites)]


def _per_site(value, n: int) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if (arr < 0).any():
        raise ValueError("exchange rates must be non-negative")
    return arr


def boson_lattice_model(g: Graph, gamma: float, U: float = 0.0, mu: float = 0.0,
                        rate_in=0.0, rate_out=0.0, n_max: int = 2,
                        cap: int = DIM_CAP) -> QuantumModel:
    """Bose-Hubbard lattice with absorption ``sqrt(rate_in) b^dagger`` and emission ``sqrt(rate_out) b``.

    Rates may be scalars or per-site arrays; zero rates drop the jump.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if gamma <= 0:
        raise ValueError("hopping gamma must be positive")
    n = g.n
    check_dimension((n_max + 1) ** n, cap)
    bs = site_operators(n, n_max)
    ns = [b.T @ b for b in bs]
    d = bs[0].shape[0]
    H = np.zeros((d, d))
    for i, j in g.edges:
        hop = bs[i].T @ bs[j]
        H -= gamma * (hop + hop.T)
    for nk in ns:
        H += 0.5 * U * nk @ (nk - np.eye(d)) - mu * nk
    gin = _per_site(rate_in, n)
    gout = _per_site(rate_out, n)
    jumps: list[Jump] = []
    for i in range(n):
        both = gin[i] > 0 and gout[i] > 0
        s = math.log(gin[i] / gout[i]) if both else None
        k = len(jumps)
        if gin[i] > 0:
            jumps.append(Jump(math.sqrt(gin[i]) * bs[i].T, i, +1, s, k + 1 if both else None))
        if gout[i] > 0:
            jumps.append(Jump(math.sqrt(gout[i]) * bs[i], i, -1, -s if both else None, k if both else None))
    number_diag = np.array([np.diag(nk) for nk in ns])
    hops = {(i, j): bs[j].T @ bs[i] for i, j in g.edges}
    top = np.array([np.isclose(np.diag(nk), n_max) for nk in ns])

    def measure(rho):
        return number_diag @ np.real(np.diag(rho))

    model = QuantumModel(d, H, jumps, g, measure, "boson",
                         {"gamma": float(gamma), "n_max": n_max, "b": bs, "hops": hops,
                          "top_level": top, "rate_in": gin, "rate_out": gout})
    model.check_pairs()
    return model


def top_level_population(model: QuantumModel, rho) -> float:
    """Largest probability of any site sitting in its highest Fock level."""
    p = np.real(np.diag(rho))
    return float(max(p[mask].sum() for mask in model.data["top_level"]))


def boson_flows(model: QuantumModel, rho, t: float = 0.0) -> QuantumFlowSnapshot:
    """Exchange flows ``f_i`` and hopping flows ``f_ij = 2 gamma Im tr(b_j^dagger b_i rho)``."""
    g = model.graph
    rho = np.asarray(rho)
    x = model.x(rho)
    ext = np.zeros(g.n)
    for j in model.jumps:
        ext[j.site] += j.direction * j.rate(rho)
    gamma = model.data["gamma"]
    hops = model.data["hops"]
    edge = np.array([2.0 * gamma * np.imag(np.sum(hops[e].T * rho)) for e in g.edges])
    drho = lindblad_rhs(model, rho, t)
    s_env = environment_entropy_rate(model, rho)
    s_sys = system_entropy_rate(rho, drho) if model.jumps else 0.0
    return QuantumFlowSnapshot(
        measure=x,
        flow=FlowField(ext, edge),
        sigma=s_sys + s_env,
        activity=activity(model, rho),
        sigma_env=s_env,
        sigma_sys=s_sys,
        energy_fluctuation=energy_fluctuation(rho, model.hamiltonian_at(t)),
    )


def boson_velocity_bound(snapshot: QuantumFlowSnapshot, gamma: float, d_G: int,
                         lam: float, check: bool = False) -> float:
    """``gamma d_G N_t + lam sqrt(sigma a / 2)``."""
    N = float(np.sum(snapshot.measure))
    sa = max(snapshot.sigma * snapshot.activity, 0.0)
    if math.isinf(lam):
        bound = gamma * d_G * N if sa == 0 else math.inf
    else:
        bound = gamma * d_G * N + lam * math.sqrt(sa / 2.0)
    if check:
        v = velocity(snapshot.flow, 0.0 if math.isinf(lam) else lam)
        if v > bound + 1e-9:
            raise InvariantViolation(f"boson velocity {v!r} exceeds bound {bound!r}")
    return bound


def exchange_current_bound(snapshot: QuantumFlowSnapshot) -> tuple[float, float]:
    """``(sum_i |f_i|, sqrt(sigma a / 2))``."""
    return (float(np.abs(snapshot.flow.external).sum()),
            math.sqrt(max(snapshot.sigma * snapshot.activity, 0.0) / 2.0))


def fock_state(model: QuantumModel, occupations) -> np.ndarray:
    """Density matrix of the product Fock state with the given site occupations."""
    n_max = model.data["n_max"]
    idx = 0
    for k in occupations:
        if not 0 <= k <= n_max:
            raise ValueError(f"occupation {k} outside 0..{n_max}")
        idx = idx * (n_max + 1) + int(k)
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def truncation_exact(model: QuantumModel, rho0, tol: float = 1e-12) -> bool:
    """True when no absorption is possible and ``rho0`` never needs more than ``n_max`` bosons in total.

    Hopping and on-site terms conserve the total number, and emission only
    lowers it, so the truncated dynamics is then exact.
    """
    if any(j.direction > 0 for j in model.jumps):
        return False
    p = np.real(np.diag(np.asarray(rho0)))
    total = sum(np.real(np.diag(b.T @ b)) for b in model.data["b"])
    return bool(np.all(total[p > tol] <= model.data["n_max"]))


def simulate_boson(model: QuantumModel, rho0, tau: float, steps: int):
    """Lindblad run recording boson flows; warns once if truncation looks unsafe."""

    def monitor(rho, t):
        p = top_level_population(model, rho)
        if p > TRUNCATION_TOL:
            return f"top Fock level population {p:.2e} exceeds {TRUNCATION_TOL:g}; raise n_max"
        return None

    run = run_model(model, rho0, tau, steps, lambda r, t: boson_flows(model, r, t),
                    monitor=None if truncation_exact(model, rho0) else monitor)
    if run.warnings:
        import warnings

        for msg in run.warnings[:1]:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return run


def lattice_degree(model: QuantumModel) -> int:
    return max_degree(model.graph)
