"""Random smooth flow systems for exercising the speed limits.

Edge flows follow master-equation kinetics ``f_ij = k_ij(t) x_j - k_ji(t) x_i``
and external flows are ``f_i = alpha_i(t) - beta_i(t) x_i``, with every
coefficient a positive sinusoid.  Both keep ``x`` non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FlowField, FlowTrajectory, evolve
from .graph import Graph, random_connected, random_tree


def _sinusoid(rng, size, lo=0.2, hi=2.0):
    amp = rng.uniform(lo, hi, size)
    depth = rng.uniform(0.0, 0.8, size)
    omega = rng.uniform(0.5, 6.0, size)
    phase = rng.uniform(0, 2 * math.pi, size)
    return lambda t: amp * (1.0 + depth * np.sin(omega * t + phase))


@dataclass(frozen=True)
class RandomFlowSystem:
    graph: Graph
    x0: np.ndarray
    tau: float
    external: bool
    generator: object

    def simulate(self, steps: int = 1000) -> FlowTrajectory:
        return evolve(self.graph, self.generator, self.x0, self.tau, steps)

    def admissible_lambdas(self) -> tuple[float, ...]:
        return (0.5, 1.0, 2.0) if self.external else (0.5, 1.0, 2.0, math.inf)


def random_flow_system(rng: np.random.Generator, n_max: int = 10, external: bool = True,
                       tree: bool = False, tau_range=(0.5, 2.0)) -> RandomFlowSystem:
    n = int(rng.integers(2, n_max + 1))
    g = random_tree(n, rng) if tree else random_connected(n, rng, p_extra=float(rng.uniform(0.0, 0.5)))
    E = np.array(g.edges, dtype=int).reshape(-1, 2)
    k_fwd = _sinusoid(rng, len(E))  # rate j -> i along stored edge (i, j)
    k_bwd = _sinusoid(rng, len(E))
    alpha = _sinusoid(rng, n, 0.0, 1.0) if external else None
    beta = _sinusoid(rng, n, 0.1, 1.5) if external else None
    zeros = np.zeros(n)

    def generator(t, x):
        edge = k_fwd(t) * x[E[:, 1]] - k_bwd(t) * x[E[:, 0]] if len(E) else np.zeros(0)
        ext = alpha(t) - beta(t) * x if external else zeros
        return FlowField(ext, edge)

    x0 = rng.dirichlet(np.full(n, 0.5)) * rng.uniform(0.5, 2.0)
    tau = float(rng.uniform(*tau_range))
    return RandomFlowSystem(g, x0, tau, external, generator)
