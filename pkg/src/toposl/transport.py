"""Discrete Wasserstein distances on graphs.

``wasserstein1`` and ``generalized_wasserstein`` are solved as min-cost flow
problems in edge (Beckmann) form: mass moves along graph edges at unit cost
per hop.  The unbalanced problem adds a reservoir vertex joined to every
vertex by cost-``lam`` arcs, so removing surplus mass or leaving a target
deficit unfilled costs ``lam`` per unit.  ``kantorovich_dual`` solves the
dual LP over graph-Lipschitz potentials independently with HiGHS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DisconnectedGraph,
    LengthMismatch,
    NonPositiveLambda,
    UnbalancedInput,
)
from .graph import Graph, shortest_path_matrix
from .mincostflow import MinCostFlow

BALANCE_TOL = 1e-9
NEG_TOL = 1e-12


def as_measure(x, n: int | None = None) -> np.ndarray:
    """Copy ``x`` to a float vector, clamping entries in ``[-1e-12, 0)`` to zero."""
    x = np.array(x, dtype=float).ravel()
    if n is not None and x.size != n:
        raise LengthMismatch(f"measure has length {x.size}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("measure has non-finite entries")
    if (x < -NEG_TOL).any():
        raise ValueError(f"measure has negative entry {x.min():.3e}")
    x[x < 0] = 0.0
    return x


@dataclass(frozen=True)
class TransportPlan:
    """``pi[i, j]`` is the mass sent from source vertex ``j`` to target vertex ``i``.

    Row sums give ``target`` and column sums give ``source``.
    """

    pi: np.ndarray
    source: np.ndarray
    target: np.ndarray

    def cost(self, d: np.ndarray) -> float:
        return float(np.sum(d * self.pi))

    def marginal_error(self) -> float:
        return float(max(np.abs(self.pi.sum(axis=1) - self.target).max(initial=0.0),
                         np.abs(self.pi.sum(axis=0) - self.source).max(initial=0.0)))

    def triplets(self, tol: float = 0.0) -> list[tuple[int, int, float]]:
        """Sparse ``(i, j, mass)`` entries with 1-based vertex labels."""
        idx = np.argwhere(self.pi > tol)
        return [(int(i) + 1, int(j) + 1, float(self.pi[i, j])) for i, j in idx]


@dataclass(frozen=True)
class UnbalancedSolution:
    value: float
    plan: TransportPlan
    removed_a: np.ndarray
    removed_b: np.ndarray
    lam: float


def total_variation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    return 0.5 * float(np.abs(a - b).sum())


def observable_norms(g: Graph, o) -> tuple[float, float]:
    """Return ``(max_i |o_i|, max over edges |o_i - o_j|)``."""
    o = np.asarray(o, dtype=float)
    if o.size != g.n:
        raise LengthMismatch(f"observable has length {o.size}, graph has {g.n} vertices")
    sup = float(np.abs(o).max()) if o.size else 0.0
    if not g.edges:
        return sup, 0.0
    e = np.array(g.edges)
    return sup, float(np.abs(o[e[:, 0]] - o[e[:, 1]]).max())


def _check_connected(g: Graph, allow_disconnected: bool):
    if not allow_disconnected and not g.is_connected():
        raise DisconnectedGraph(f"graph has {len(g.components())} components")


def _solve_flow(g: Graph, a: np.ndarray, b: np.ndarray, lam: float | None):
    """Min-cost flow core.

    Returns ``(cost, edge_flow, reservoir_flow, phi)`` where ``edge_flow[k]``
    is the net mass moved from ``i`` to ``j`` along edge ``k = (i, j)``,
    ``reservoir_flow[i]`` the net mass sent from vertex ``i`` into the
    reservoir, and ``phi`` the optimal dual potential on real vertices
    (reservoir potential shifted to zero when present).
    """
    n = g.n
    nodes = n + (1 if lam is not None else 0)
    mcf = MinCostFlow(nodes)
    edge_arcs = []
    for i, j in g.edges:
        edge_arcs.append((mcf.add_arc(i, j, 1.0), mcf.add_arc(j, i, 1.0)))
    res_arcs = []
    supply = list(a - b)
    if lam is not None:
        R = n
        for i in range(n):
            res_arcs.append((mcf.add_arc(i, R, lam), mcf.add_arc(R, i, lam)))
        supply.append(float(b.sum() - a.sum()))
    try:
        cost, pot = mcf.solve(supply)
    except ValueError as exc:
        raise DisconnectedGraph("mass cannot be routed between components") from exc
    flow = mcf.flow
    edge_flow = np.array([flow[f] - flow[r] for f, r in edge_arcs])
    res_flow = np.array([flow[f] - flow[r] for f, r in res_arcs]) if res_arcs else np.zeros(n)
    phi = -np.array(pot[:n])
    if lam is not None:
        phi = phi + pot[n]
    return cost, edge_flow, res_flow, phi


def _decompose(g: Graph, a, b, edge_flow, res_flow, tol):
    """Split an acyclic optimal flow into source-to-sink paths.

    Returns ``(pi, removed_a, removed_b)`` with ``pi[target, source]``.
    """
    n = g.n
    R = n
    out: list[dict[int, float]] = [dict() for _ in range(n + 1)]
    for (i, j), f in zip(g.edges, edge_flow):
        if f > tol:
            out[i][j] = f
        elif f < -tol:
            out[j][i] = -f
    for i, f in enumerate(res_flow):
        if f > tol:
            out[i][R] = f
        elif f < -tol:
            out[R][i] = -f
    net = np.append(a - b, b.sum() - a.sum())
    supply = np.where(net > 0, net, 0.0)
    demand = np.where(net < 0, -net, 0.0)
    pi = np.diag(np.minimum(a, b)).astype(float)
    removed_a = np.zeros(n)
    removed_b = np.zeros(n)

    guard = 4 * (n + 1) * (len(g.edges) + n + 2) + 16
    for s in range(n + 1):
        while supply[s] > tol and guard > 0:
            guard -= 1
            path = [s]
            u = s
            seen = {s}
            while out[u] and (u == s or demand[u] <= tol):
                v = max(out[u], key=out[u].get)
                if v in seen:
                    break
                path.append(v)
                seen.add(v)
                u = v
            t = path[-1]
            if demand[t] <= tol or t == s:
                # numerical residue with nowhere to go; drop it
                supply[s] = 0.0
                break
            m = min(supply[s], demand[t])
            for u, v in zip(path, path[1:]):
                m = min(m, out[u][v])
            for u, v in zip(path, path[1:]):
                out[u][v] -= m
                if out[u][v] <= tol:
                    del out[u][v]
            supply[s] -= m
            demand[t] -= m
            through_reservoir = R in path
            if s != R and t != R and not through_reservoir:
                pi[t, s] += m
            else:
                if s != R:
                    removed_a[s] += m
                if t != R:
                    removed_b[t] += m
    return pi, removed_a, removed_b


def _balanced_inputs(a, b):
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > BALANCE_TOL:
        raise UnbalancedInput(f"total masses differ: {sa!r} vs {sb!r}")
    if sb > 0 and sa != sb:
        b = b * (sa / sb)
    return a, b


def wasserstein1(g: Graph, a, b, allow_disconnected: bool = False,
                 return_potential: bool = False):
    """Discrete L1-Wasserstein distance between balanced measures.

    Returns ``(value, plan)``; with ``return_potential`` also the dual
    potential recovered from the flow solver.
    """
    a = as_measure(a, g.n)
    b = as_measure(b, g.n)
    a, b = _balanced_inputs(a, b)
    _check_connected(g, allow_disconnected)
    if allow_disconnected:
        for comp in g.components():
            if abs(a[comp].sum() - b[comp].sum()) > BALANCE_TOL:
                raise DisconnectedGraph("balanced transport would have to cross components")
    tol = 1e-13 * max(1.0, a.sum())
    cost, ef, rf, phi = _solve_flow(g, a, b, None)
    pi, _, _ = _decompose(g, a, b, ef, rf, tol)
    plan = TransportPlan(pi, a, b)
    if return_potential:
        return cost, plan, phi
    return cost, plan


def generalized_wasserstein(g: Graph, a, b, lam: float,
                            allow_disconnected: bool = False) -> UnbalancedSolution:
    """Unbalanced Wasserstein distance with removal cost ``lam`` per unit mass."""
    if not (lam > 0):
        raise NonPositiveLambda(f"lambda must be positive, got {lam!r}")
    a = as_measure(a, g.n)
    b = as_measure(b, g.n)
    _check_connected(g, allow_disconnected)
    if math.isinf(lam):
        value, plan = wasserstein1(g, a, b, allow_disconnected)
        return UnbalancedSolution(value, plan, np.zeros(g.n), np.zeros(g.n), lam)
    tol = 1e-13 * max(1.0, a.sum(), b.sum())
    cost, ef, rf, _ = _solve_flow(g, a, b, float(lam))
    pi, ra, rb = _decompose(g, a, b, ef, rf, tol)
    ra = np.minimum(ra, a)
    rb = np.minimum(rb, b)
    plan = TransportPlan(pi, a - ra, b - rb)
    return UnbalancedSolution(cost, plan, ra, rb, float(lam))


def distance(g: Graph, a, b, lam: float = math.inf, allow_disconnected: bool = False) -> float:
    """``W_{1,lam}`` value; ``lam = inf`` means the balanced distance.

    Skips plan extraction, so it is the cheap path for long chains of
    distance evaluations.
    """
    a = as_measure(a, g.n)
    b = as_measure(b, g.n)
    _check_connected(g, allow_disconnected)
    if math.isinf(lam):
        a, b = _balanced_inputs(a, b)
        return _solve_flow(g, a, b, None)[0]
    if not (lam > 0):
        raise NonPositiveLambda(f"lambda must be positive, got {lam!r}")
    return _solve_flow(g, a, b, float(lam))[0]


def kantorovich_dual(g: Graph, a, b) -> tuple[float, np.ndarray]:
    """Maximise ``phi @ (a - b)`` over potentials with ``|phi_i - phi_j| <= 1`` on edges.

    The potential is gauged so ``phi[0] == 0``.
    """
    a = as_measure(a, g.n)
    b = as_measure(b, g.n)
    a, b = _balanced_inputs(a, b)
    _check_connected(g, False)
    n = g.n
    diff = a - b
    if not np.any(np.abs(diff) > 1e-15) or not g.edges:
        return 0.0, np.zeros(n)
    m = len(g.edges)
    A = np.zeros((2 * m, n))
    for k, (i, j) in enumerate(g.edges):
        A[2 * k, i], A[2 * k, j] = 1.0, -1.0
        A[2 * k + 1, i], A[2 * k + 1, j] = -1.0, 1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    # default tolerances (1e-7) let HiGHS ignore small entries of a - b
    res = linprog(-diff, A_ub=A, b_ub=np.ones(2 * m), bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9})
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    phi = np.asarray(res.x, dtype=float)
    # incidence constraints are totally unimodular, so optimal vertices are integral
    snapped = np.round(phi)
    if np.abs(phi - snapped).max() < 1e-6:
        phi = snapped
    return float(phi @ diff), phi


def lipschitz_constant(g: Graph, phi) -> float:
    return observable_norms(g, phi)[1]


def hop_distances(g: Graph) -> np.ndarray:
    return shortest_path_matrix(g, allow_disconnected=True)
