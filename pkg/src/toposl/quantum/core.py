"""Dense density-matrix dynamics shared by every quantum model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..dynamics import FlowField, FlowTrajectory
from ..errors import DimensionCap, DimensionMismatch, InvariantViolation, NotHermitian
from ..graph import Graph
from ..numerics import hermitian_eig, is_hermitian, rk4_iter

DIM_CAP = 4096
EIG_CLAMP = 1e-14


def check_dimension(dim: int, cap: int = DIM_CAP) -> None:
    if dim > cap:
        raise DimensionCap(f"Hilbert space dimension {dim} exceeds cap {cap}")


def validate_density(rho, herm_tol: float = 1e-9, trace_tol: float = 1e-8,
                     eig_tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, herm_tol):
        raise NotHermitian("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"density matrix trace {tr!r} != 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -eig_tol:
        raise InvariantViolation(f"density matrix has eigenvalue {lo:.3e}")
    return rho


@dataclass(frozen=True)
class Jump:
    """A Lindblad jump operator.

    ``entropy`` is the environmental entropy change ``s_k`` and ``partner``
    the index of the reversed jump, when local detailed balance is declared.
    """

    op: np.ndarray
    site: int | None = None
    direction: int = 0
    entropy: float | None = None
    partner: int | None = None

    def __post_init__(self):
        op = np.asarray(self.op, dtype=complex)
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "_dag", op.conj().T)
        object.__setattr__(self, "_dagop", op.conj().T @ op)

    @property
    def dag(self) -> np.ndarray:
        return self._dag

    @property
    def dagop(self) -> np.ndarray:
        return self._dagop

    def rate(self, rho: np.ndarray) -> float:
        """``tr(L rho L^dagger)``."""
        return float(np.real(np.sum(self._dagop.T * rho)))


@dataclass(frozen=True)
class QuantumModel:
    """Hamiltonian (constant matrix or callable ``t -> matrix``), jumps and the measure map."""

    dim: int
    hamiltonian: object
    jumps: tuple = ()
    graph: Graph | None = None
    measure: Callable | None = None
    kind: str = "generic"
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if not callable(self.hamiltonian):
            H = np.asarray(self.hamiltonian, dtype=complex)
            if H.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"Hamiltonian shape {H.shape} != ({self.dim}, {self.dim})")
            if not is_hermitian(H):
                raise NotHermitian("Hamiltonian is not Hermitian")
            object.__setattr__(self, "hamiltonian", H)
        for j in self.jumps:
            if j.op.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"jump operator shape {j.op.shape} != ({self.dim}, {self.dim})")
        anti = sum((j.dagop for j in self.jumps), np.zeros((self.dim, self.dim), dtype=complex))
        object.__setattr__(self, "_anti", 0.5 * anti)
        if not callable(self.hamiltonian):
            object.__setattr__(self, "_K", -1j * self.hamiltonian - self._anti)

    @property
    def time_dependent(self) -> bool:
        return callable(self.hamiltonian)

    def hamiltonian_at(self, t: float = 0.0) -> np.ndarray:
        if callable(self.hamiltonian):
            return np.asarray(self.hamiltonian(t), dtype=complex)
        return self.hamiltonian

    def generator_at(self, t: float = 0.0) -> np.ndarray:
        """Effective non-Hermitian generator ``-iH(t) - sum_k L_k^dagger L_k / 2``."""
        if callable(self.hamiltonian):
            return -1j * self.hamiltonian_at(t) - self._anti
        return self._K

    def x(self, rho) -> np.ndarray:
        if self.measure is None:
            return np.real(np.diag(rho)).copy()
        return self.measure(rho)

    def check_pairs(self, tol: float = 1e-9) -> None:
        from ..errors import UnpairedJump

        for k, j in enumerate(self.jumps):
            if j.partner is None:
                continue
            if not (0 <= j.partner < len(self.jumps)):
                raise UnpairedJump(f"jump {k} names missing partner {j.partner}")
            p = self.jumps[j.partner]
            if p.partner != k or j.entropy is None or p.entropy is None:
                raise UnpairedJump(f"jumps {k} and {j.partner} are not mutually paired")
            if abs(j.entropy + p.entropy) > tol:
                raise UnpairedJump(f"entropy changes of jumps {k}, {j.partner} do not cancel")
            if np.abs(j.op - math.exp(j.entropy / 2) * p.dag).max() > tol:
                raise UnpairedJump(f"jump {k} violates local detailed balance with {j.partner}")


def lindblad_rhs(model: QuantumModel, rho, t: float = 0.0) -> np.ndarray:
    """``-i[H, rho] + sum_k (L rho L^dagger - {L^dagger L, rho}/2)`` for Hermitian ``rho``.

    Written as ``K rho + (K rho)^dagger + sum_k L rho L^dagger`` with
    ``K = -iH - sum_k L^dagger L / 2``, which keeps the output exactly Hermitian.
    """
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise DimensionMismatch(f"state shape {rho.shape} != ({model.dim}, {model.dim})")
    # the K form drops the decay of any anti-Hermitian part, so strip it first
    rho = 0.5 * (rho + rho.conj().T)
    X = model.generator_at(t) @ rho
    out = X + X.conj().T
    for j in model.jumps:
        out += j.op @ rho @ j.dag
    return out


def liouvillian(model: QuantumModel, t: float = 0.0) -> np.ndarray:
    """Superoperator acting on row-major ``vec(rho)``."""
    d = model.dim
    eye = np.eye(d)
    H = model.hamiltonian_at(t)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for j in model.jumps:
        L += np.kron(j.op, j.op.conj()) - 0.5 * (np.kron(j.dagop, eye) + np.kron(eye, j.dagop.T))
    return L


def steady_state(model: QuantumModel) -> np.ndarray:
    """Null vector of the Liouvillian, normalised to a density matrix."""
    L = liouvillian(model)
    _, _, vh = np.linalg.svd(L)
    rho = vh[-1].conj().reshape(model.dim, model.dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def energy_fluctuation(rho, A) -> float:
    """``sqrt(tr(A^2 rho) - tr(A rho)^2)``."""
    A = np.asarray(A)
    if not is_hermitian(A):
        raise NotHermitian("observable is not Hermitian")
    rho = np.asarray(rho)
    mean = np.real(np.sum(A.T * rho))
    second = np.real(np.sum((A @ A).T * rho))
    return math.sqrt(max(second - mean * mean, 0.0))


def expectation(A, rho) -> complex:
    """``tr(A rho)`` without forming the product."""
    return complex(np.sum(np.asarray(A).T * rho))


def activity(model: QuantumModel, rho) -> float:
    return float(sum(j.rate(rho) for j in model.jumps))


def environment_entropy_rate(model: QuantumModel, rho) -> float:
    """``sum_k tr(L_k rho L_k^dagger) s_k``.

    A jump without a declared entropy change has no reverse process, so any
    traffic through it makes the rate infinite.
    """
    total = 0.0
    for j in model.jumps:
        r = j.rate(rho)
        if j.entropy is None:
            if r > 1e-14:
                return math.inf
        else:
            total += r * j.entropy
    return float(total)


def system_entropy_rate(rho, drho) -> float:
    """``-tr(drho ln rho)`` in the eigenbasis of ``rho``; eigenvalues are clamped at 1e-14."""
    p, U = hermitian_eig(rho)
    d = np.real(np.einsum("ij,jk,ki->i", U.conj().T, drho, U))
    small = (p < EIG_CLAMP) & (np.abs(d) < EIG_CLAMP)
    terms = np.where(small, 0.0, d * np.log(np.maximum(p, EIG_CLAMP)))
    return float(-terms.sum())


@dataclass(frozen=True)
class QuantumFlowSnapshot:
    """Measure, flows and thermodynamic rates at one instant (NaN where not defined)."""

    measure: np.ndarray
    flow: FlowField
    sigma: float = math.nan
    activity: float = math.nan
    sigma_env: float = math.nan
    sigma_sys: float = math.nan
    sigma_pop: float = math.nan
    energy_fluctuation: float = math.nan

    def velocity(self, lam: float = 0.0) -> float:
        from ..dynamics import velocity

        return velocity(self.flow, lam)


@dataclass
class QuantumRun:
    """A simulated trajectory with per-sample snapshots and state-health diagnostics."""

    trajectory: FlowTrajectory
    snapshots: list
    final_state: np.ndarray
    max_trace_error: float
    min_eigenvalue: float
    max_hermitian_error: float
    warnings: list = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.snapshots], dtype=float)


def run_model(model: QuantumModel, rho0, tau: float, steps: int, probe,
              check_state: bool = True, monitor=None, check_every: int = 1) -> QuantumRun:
    """Integrate the Lindblad equation with RK4 and apply ``probe(rho, t)`` at every step.

    ``probe`` returns a :class:`QuantumFlowSnapshot`; the trace, Hermiticity
    and spectrum of the state are checked every ``check_every`` steps and at
    the end.  ``monitor(rho, t)`` may
    return a warning string; only the first one is kept.
    """
    if model.graph is None:
        raise ValueError("model needs a graph to build a flow trajectory")
    rho0 = validate_density(rho0)
    times, measures, flows, snaps = [], [], [], []
    tr_err = herm_err = 0.0
    min_eig = math.inf
    notes: list[str] = []
    rho = rho0
    for k, (t, rho) in enumerate(rk4_iter(lambda t, r: lindblad_rhs(model, r, t), rho0, 0.0, tau, steps)):
        snap = probe(rho, t)
        times.append(t)
        measures.append(snap.measure)
        flows.append(snap.flow)
        snaps.append(snap)
        if check_state and (k % check_every == 0 or k == steps):
            tr_err = max(tr_err, abs(np.trace(rho).real - 1.0))
            herm_err = max(herm_err, float(np.abs(rho - rho.conj().T).max()))
            min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        if monitor is not None and not notes:
            msg = monitor(rho, t)
            if msg:
                notes.append(f"t={t:.6g}: {msg}")
    traj = FlowTrajectory.from_flows(model.graph, times, measures, flows)
    return QuantumRun(traj, snaps, rho, tr_err, min_eig if check_state else math.nan, herm_err, notes)


# ---- random helpers ----

def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (G + G.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble state of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=1)
