"""Measures driven by vertex and edge flows, and the speed limits they obey.

A measure ``x`` on a graph changes as ``dx_i/dt = f_i + sum_j f_ij`` with
antisymmetric edge flows ``f_ij`` and arbitrary external flows ``f_i``.
The time needed to go from ``x_0`` to ``x_tau`` is at least the
(generalized) Wasserstein distance between them over the time-averaged
velocity ``lam * sum|f_i| + sum|f_ij|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExternalFlowsPresent, NegativeMassBlowup
from .graph import Graph
from .numerics import TimeSeries, rk4_integrate
from .transport import distance, observable_norms

EXTERNAL_ZERO_TOL = 1e-10
NEGATIVE_MASS_TOL = 1e-6


@dataclass(frozen=True)
class FlowField:
    """Flows at one instant.

    ``edge[k]`` is ``f_ij`` for ``(i, j) = graph.edges[k]`` (``i < j``);
    ``f_ji = -f_ij`` is implied.
    """

    external: np.ndarray
    edge: np.ndarray

    @classmethod
    def zeros(cls, g: Graph) -> "FlowField":
        return cls(np.zeros(g.n), np.zeros(len(g.edges)))

    @classmethod
    def from_dict(cls, g: Graph, edge_flows: dict, external=None) -> "FlowField":
        """Build from ``{(i, j): f_ij}``; keys may come in either order."""
        edge = np.zeros(len(g.edges))
        for (i, j), f in edge_flows.items():
            k = g.edge_index(i, j)
            edge[k] += f if i < j else -f
        ext = np.zeros(g.n) if external is None else np.asarray(external, dtype=float)
        return cls(ext, edge)

    def as_dict(self, g: Graph) -> dict[tuple[int, int], float]:
        return {e: float(f) for e, f in zip(g.edges, self.edge)}

    def divergence(self, g: Graph) -> np.ndarray:
        """Induced rate of change ``f_i + sum_j f_ij`` at every vertex."""
        if not len(self.edge):
            return np.array(self.external, dtype=float)
        return self.external + g.incidence @ self.edge


def velocity(flow: FlowField, lam: float = 0.0) -> float:
    """``lam * sum_i |f_i| + sum_edges |f_ij|``; ``lam = 0`` drops external flows."""
    edge_part = float(np.abs(flow.edge).sum())
    if lam == 0:
        return edge_part
    return lam * float(np.abs(flow.external).sum()) + edge_part


@dataclass(frozen=True)
class FlowTrajectory:
    graph: Graph
    times: np.ndarray
    measures: np.ndarray  # (K, N)
    external: np.ndarray  # (K, N)
    edge: np.ndarray  # (K, |E|)

    def __len__(self):
        return self.times.size

    @property
    def tau(self) -> float:
        return float(self.times[-1] - self.times[0])

    def flow(self, k: int) -> FlowField:
        return FlowField(self.external[k], self.edge[k])

    def velocities(self, lam: float = 0.0) -> np.ndarray:
        v = np.abs(self.edge).sum(axis=1)
        if lam != 0:
            v = v + lam * np.abs(self.external).sum(axis=1)
        return v

    def has_external_flows(self, tol: float = EXTERNAL_ZERO_TOL) -> bool:
        return bool(self.external.size) and float(np.abs(self.external).max()) > tol

    def window(self, start: int, stop: int) -> "FlowTrajectory":
        """Samples ``start..stop`` inclusive."""
        sl = slice(start, stop + 1)
        return FlowTrajectory(self.graph, self.times[sl], self.measures[sl],
                              self.external[sl], self.edge[sl])

    def subsample(self, stride: int) -> "FlowTrajectory":
        idx = np.arange(0, len(self), stride)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return FlowTrajectory(self.graph, self.times[idx], self.measures[idx],
                              self.external[idx], self.edge[idx])

    def measure_series(self, names=None) -> TimeSeries:
        return TimeSeries(self.times, self.measures, tuple(names or ()))

    @classmethod
    def from_flows(cls, g: Graph, times, measures, flows) -> "FlowTrajectory":
        flows = list(flows)
        ext = np.array([f.external for f in flows], dtype=float).reshape(len(flows), g.n)
        edge = np.array([f.edge for f in flows], dtype=float).reshape(len(flows), len(g.edges))
        return cls(g, np.asarray(times, dtype=float), np.asarray(measures, dtype=float), ext, edge)


def evolve(g: Graph, flow_generator, x0, tau: float, steps: int) -> FlowTrajectory:
    """Integrate the flow equation with RK4 and record the flows on the grid.

    ``flow_generator(t, x)`` returns the :class:`FlowField` at state ``x``.
    """
    x0 = np.asarray(x0, dtype=float)

    def rhs(t, x):
        return flow_generator(t, x).divergence(g)

    series = rk4_integrate(rhs, x0, 0.0, tau, steps)
    xs = series.values
    if xs.min() < -NEGATIVE_MASS_TOL:
        k = int(np.argmin(xs.min(axis=1)))
        raise NegativeMassBlowup(f"mass {xs[k].min():.3e} at t={series.times[k]:.6g}")
    flows = [flow_generator(t, x) for t, x in zip(series.times, xs)]
    return FlowTrajectory.from_flows(g, series.times, xs, flows)


@dataclass(frozen=True)
class BoundReport:
    tau: float
    lam: float
    distance: float
    avg_velocity: float
    tau_bound: float
    saturation_ratio: float

    def holds(self, rel_tol: float = 1e-6) -> bool:
        return self.tau_bound <= self.tau * (1.0 + rel_tol) + 1e-15

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "lambda": "inf" if math.isinf(self.lam) else self.lam,
            "distance": self.distance,
            "avg_velocity": self.avg_velocity,
            "tau_bound": self.tau_bound,
            "saturation_ratio": self.saturation_ratio,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        lam = math.inf if d["lambda"] == "inf" else float(d["lambda"])
        return cls(d["tau"], lam, d["distance"], d["avg_velocity"], d["tau_bound"],
                   d["saturation_ratio"])


def make_report(tau: float, lam: float, dist: float, avg_velocity: float) -> BoundReport:
    if dist <= 0:
        tau_bound = 0.0
    elif avg_velocity > 0:
        tau_bound = dist / avg_velocity
    else:
        tau_bound = math.inf
    ratio = tau_bound / tau if tau > 0 else 0.0
    return BoundReport(float(tau), float(lam), float(dist), float(avg_velocity),
                       float(tau_bound), float(ratio))


def _average(traj: FlowTrajectory, values: np.ndarray) -> float:
    if len(traj) < 2 or traj.tau <= 0:
        return 0.0
    return float(np.trapezoid(values, traj.times)) / traj.tau


def _velocity_lambda(traj: FlowTrajectory, lam: float) -> float:
    """Velocity weight to use; raises if ``lam = inf`` but external flows exist."""
    if math.isinf(lam):
        if traj.has_external_flows():
            raise ExternalFlowsPresent(
                f"lambda=inf needs vanishing external flows (max |f_i| = {np.abs(traj.external).max():.3e})")
        return 0.0
    if not (lam > 0):
        raise ValueError("lambda must be positive or inf")
    return lam


def speed_limit_report(traj: FlowTrajectory, lam: float = math.inf,
                       allow_disconnected: bool = False) -> BoundReport:
    """Evaluate ``tau >= W_{1,lam}(x_0, x_tau) / <v_{t,lam}>_tau`` on a trajectory."""
    w = _velocity_lambda(traj, lam)
    dist = distance(traj.graph, traj.measures[0], traj.measures[-1], lam, allow_disconnected)
    avg = _average(traj, traj.velocities(w))
    return make_report(traj.tau, lam, dist, avg)


def observable_bound(traj: FlowTrajectory, o, lam: float = math.inf) -> BoundReport:
    """Speed limit for ``O_t = o @ x_t``.

    ``distance`` holds ``|O_tau - O_0|`` and ``avg_velocity`` holds
    ``max(|o|_inf / lam, |o|_Lip) * <v_{t,lam}>``.
    """
    o = np.asarray(o, dtype=float)
    w = _velocity_lambda(traj, lam)
    sup, lip = observable_norms(traj.graph, o)
    factor = lip if math.isinf(lam) else max(sup / lam, lip)
    change = abs(float(o @ (traj.measures[-1] - traj.measures[0])))
    avg = factor * _average(traj, traj.velocities(w))
    return make_report(traj.tau, lam, change, avg)


def discretized_transport_check(traj: FlowTrajectory, lam: float = math.inf,
                                stride: int = 1, allow_disconnected: bool = False) -> tuple[float, float]:
    """Return ``(sum_k W_{1,lam}(x_k, x_{k+1}), integral of v_{t,lam})``.

    The sum runs over consecutive samples of the (optionally subsampled)
    grid; the integral always uses the full grid.
    """
    w = _velocity_lambda(traj, lam)
    rhs = float(np.trapezoid(traj.velocities(w), traj.times)) if len(traj) > 1 else 0.0
    coarse = traj.subsample(stride) if stride > 1 else traj
    g = traj.graph
    lhs = 0.0
    for k in range(len(coarse) - 1):
        lhs += distance(g, coarse.measures[k], coarse.measures[k + 1], lam, allow_disconnected)
    return lhs, rhs
