"""Closed-system populations over a projective partition, and the measured quantum walk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from ..dynamics import FlowField, FlowTrajectory, velocity
from ..errors import IncompleteProjectors, InvariantViolation
from ..graph import Graph, chain, max_degree
from ..transport import distance
from .core import QuantumFlowSnapshot, energy_fluctuation


def check_projectors(projectors, tol: float = 1e-9) -> list[np.ndarray]:
    P = [np.asarray(p, dtype=complex) for p in projectors]
    d = P[0].shape[0]
    if np.abs(sum(P) - np.eye(d)).max() > tol:
        raise IncompleteProjectors("projectors do not sum to the identity")
    for a in range(len(P)):
        if np.abs(P[a] @ P[a] - P[a]).max() > tol:
            raise IncompleteProjectors(f"projector {a} is not idempotent")
        for b in range(a + 1, len(P)):
            if np.abs(P[a] @ P[b]).max() > tol:
                raise IncompleteProjectors(f"projectors {a} and {b} are not orthogonal")
    return P


def basis_projectors(d: int) -> list[np.ndarray]:
    eye = np.eye(d, dtype=complex)
    return [np.outer(eye[n], eye[n]) for n in range(d)]


def projective_graph(H, projectors, tol: float = 1e-12) -> Graph:
    """Vertices are projectors; ``(m, n)`` is an edge when ``P_m H P_n != 0``."""
    n = len(projectors)
    edges = [(a, b) for a in range(n) for b in range(a + 1, n)
             if np.abs(projectors[a] @ H @ projectors[b]).max() > tol]
    return Graph(n, edges)


def projected_state(rho, projectors) -> np.ndarray:
    return sum(P @ rho @ P for P in projectors)


def isolated_projective(H, projectors, rho, graph: Graph | None = None,
                        check: bool = True) -> QuantumFlowSnapshot:
    """Population flows ``f_nm = -i(tr(P_n H P_m rho) - tr(P_m H P_n rho))``.

    ``energy_fluctuation`` is taken in the projected state with ``H`` shifted
    so that its mean there vanishes.  With ``check`` the velocity is compared
    with ``sqrt(d_G)`` times that fluctuation.
    """
    H = np.asarray(H, dtype=complex)
    P = check_projectors(projectors)
    rho = np.asarray(rho)
    g = graph or projective_graph(H, P)
    x = np.array([np.real(np.sum(p.T * rho)) for p in P])
    edge = np.empty(len(g.edges))
    for k, (n, m) in enumerate(g.edges):
        z = np.sum((P[n] @ H @ P[m]).T * rho)
        edge[k] = 2.0 * np.imag(z)
    rt = projected_state(rho, P)
    shift = np.real(np.sum(H.T * rt))
    delta = energy_fluctuation(rt, H - shift * np.eye(H.shape[0]))
    snap = QuantumFlowSnapshot(measure=x, flow=FlowField(np.zeros(g.n), edge), energy_fluctuation=delta)
    if check:
        v = velocity(snap.flow)
        bound = math.sqrt(max_degree(g)) * delta if g.edges else 0.0
        if v > bound + 1e-9:
            raise InvariantViolation(f"isolated velocity {v!r} exceeds sqrt(d_G) * fluctuation {bound!r}")
    return snap


def hopping_hamiltonian(couplings) -> np.ndarray:
    """Nearest-neighbour hopping ``sum_n g_n (|n><n+1| + h.c.)`` on a line."""
    c = np.asarray(couplings, dtype=float)
    N = c.size + 1
    H = np.zeros((N, N))
    idx = np.arange(N - 1)
    H[idx, idx + 1] = c
    H[idx + 1, idx] = c
    return H


@dataclass(frozen=True)
class WalkReport:
    tau: float
    distance: float
    velocity_integral: float
    fluctuation_integral: float  # integral of sqrt(d_G) * Delta H
    tau_bound_velocity: float
    tau_bound_fluctuation: float
    segment_distance: np.ndarray
    segment_velocity: np.ndarray
    segment_fluctuation: np.ndarray

    def holds(self, rel_tol: float = 1e-6) -> bool:
        ok_seg = np.all(self.segment_distance <= self.segment_velocity * (1 + rel_tol) + 1e-12) and \
            np.all(self.segment_velocity <= self.segment_fluctuation * (1 + rel_tol) + 1e-12)
        ok_tot = self.tau_bound_fluctuation <= self.tau_bound_velocity * (1 + rel_tol) + 1e-15 and \
            self.tau_bound_velocity <= self.tau * (1 + rel_tol) + 1e-15
        return bool(ok_seg and ok_tot)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "distance": self.distance,
            "velocity_integral": self.velocity_integral,
            "fluctuation_integral": self.fluctuation_integral,
            "tau_bound_velocity": self.tau_bound_velocity,
            "tau_bound_fluctuation": self.tau_bound_fluctuation,
        }


def _ratio(num: float, den: float) -> float:
    if num <= 0:
        return 0.0
    return num / den if den > 0 else math.inf


def measured_walk_simulate(N: int, couplings, dt: float, K: int, x0_site: int = 0,
                           substeps: int = 64):
    """Unitary evolution for ``dt`` between ``K`` projective position measurements.

    Within each segment the state is propagated exactly on a grid of
    ``substeps`` points and the velocity and fluctuation integrals use
    Simpson's rule.  The returned trajectory records the pre-measurement
    state at each measurement time (populations are continuous across the
    collapse, edge flows are not).
    """
    if N < 2:
        raise ValueError("walk needs N >= 2")
    couplings = np.broadcast_to(np.asarray(couplings, dtype=float), (N - 1,))
    if substeps < 2 or substeps % 2:
        raise ValueError("substeps must be an even number >= 2")
    H = hopping_hamiltonian(couplings).astype(complex)
    P = basis_projectors(N)
    g = chain(N)
    root_d = math.sqrt(max_degree(g))
    w, V = np.linalg.eigh(H)
    s = np.linspace(0.0, dt, substeps + 1)
    props = [V @ np.diag(np.exp(-1j * w * si)) @ V.conj().T for si in s]

    rho = np.zeros((N, N), dtype=complex)
    rho[x0_site, x0_site] = 1.0
    times = [0.0]
    first = isolated_projective(H, P, rho, g)
    measures, flows = [first.measure], [first.flow]
    seg_d, seg_v, seg_f = [], [], []
    for k in range(K):
        xs, vs, fs = [], [], []
        for j, U in enumerate(props):
            r = U @ rho @ U.conj().T
            snap = isolated_projective(H, P, r, g)
            xs.append(snap.measure)
            vs.append(velocity(snap.flow))
            fs.append(root_d * snap.energy_fluctuation)
            if j > 0:
                times.append(k * dt + s[j])
                measures.append(snap.measure)
                flows.append(snap.flow)
        seg_v.append(float(simpson(vs, x=s)))
        seg_f.append(float(simpson(fs, x=s)))
        seg_d.append(distance(g, xs[0], xs[-1]))
        rho = np.diag(np.real(np.diag(r))).astype(complex)
    traj = FlowTrajectory.from_flows(g, times, measures, flows)
    tau = K * dt
    dist = distance(g, traj.measures[0], traj.measures[-1]) if K else 0.0
    vi, fi = float(np.sum(seg_v)), float(np.sum(seg_f))
    report = WalkReport(
        tau=tau, distance=dist, velocity_integral=vi, fluctuation_integral=fi,
        tau_bound_velocity=_ratio(dist, vi / tau) if tau > 0 else 0.0,
        tau_bound_fluctuation=_ratio(dist, fi / tau) if tau > 0 else 0.0,
        segment_distance=np.array(seg_d), segment_velocity=np.array(seg_v),
        segment_fluctuation=np.array(seg_f),
    )
    return traj, report
