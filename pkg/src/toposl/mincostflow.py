"""Successive-shortest-path min-cost flow with real-valued supplies.

Small dense problems only (a few dozen nodes).  Node potentials are kept
so every shortest-path search runs Dijkstra on non-negative reduced costs;
at termination the negated potentials are an optimal dual solution.
"""

from __future__ import annotations

import heapq
import math

INF = math.inf


class MinCostFlow:
    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []
        self.cost: list[float] = []
        self.flow: list[float] = []

    def add_arc(self, u: int, v: int, cost: float, cap: float = INF) -> int:
        """Add arc ``u -> v``; returns its id (the residual twin is ``id ^ 1``)."""
        if cost < 0:
            raise ValueError("arc costs must be non-negative")
        e = len(self.to)
        self.adj[u].append(e)
        self.to.append(v)
        self.cap.append(cap)
        self.cost.append(cost)
        self.flow.append(0.0)
        self.adj[v].append(e + 1)
        self.to.append(u)
        self.cap.append(0.0)
        self.cost.append(-cost)
        self.flow.append(0.0)
        return e

    def solve(self, supply, tol: float | None = None) -> tuple[float, list[float]]:
        """Route ``supply`` (positive = source, negative = sink) at minimum cost.

        Returns ``(cost, potentials)``.  Raises ``ValueError`` if some
        excess cannot reach any deficit.
        """
        n = self.n
        excess = [float(s) for s in supply]
        scale = max(1.0, sum(abs(s) for s in excess))
        eps = tol if tol is not None else 1e-14 * scale
        pot = [0.0] * n
        to, cap, cost, flow, adj = self.to, self.cap, self.cost, self.flow, self.adj

        while True:
            sources = [v for v in range(n) if excess[v] > eps]
            if not sources:
                break
            dist = [INF] * n
            parent = [-1] * n
            done = [False] * n
            heap = []
            for s in sources:
                dist[s] = 0.0
                heap.append((0.0, s))
            heapq.heapify(heap)
            target = -1
            while heap:
                d, u = heapq.heappop(heap)
                if done[u]:
                    continue
                done[u] = True
                if excess[u] < -eps:
                    target = u
                    break
                pu = pot[u]
                for e in adj[u]:
                    if cap[e] - flow[e] <= eps:
                        continue
                    v = to[e]
                    if done[v]:
                        continue
                    nd = d + cost[e] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        parent[v] = e
                        heapq.heappush(heap, (nd, v))
            if target < 0:
                raise ValueError("infeasible flow: excess cannot reach a deficit")
            dt = dist[target]
            for v in range(n):
                pot[v] += dist[v] if dist[v] < dt else dt

            amount = -excess[target]
            v = target
            while parent[v] >= 0:
                e = parent[v]
                amount = min(amount, cap[e] - flow[e])
                v = to[e ^ 1]
            amount = min(amount, excess[v])
            source = v
            v = target
            while parent[v] >= 0:
                e = parent[v]
                flow[e] += amount
                flow[e ^ 1] -= amount
                v = to[e ^ 1]
            excess[source] -= amount
            excess[target] += amount

        total = 0.0
        for e in range(0, len(to), 2):
            if flow[e] != 0.0:
                total += cost[e] * flow[e]
        return total, pot
