"""Min-cost flow by successive shortest paths with node potentials.

Small, dependency-free solver used for the capacitated BS/user assignment.
Costs are floats; capacities are integers.
"""
from __future__ import annotations

import heapq
import math

INF = math.inf


class MinCostFlow:
    def __init__(self, num_nodes: int):
        self.n = num_nodes
        self.graph: list[list[list]] = [[] for _ in range(num_nodes)]

    def add_edge(self, u: int, v: int, capacity: int, cost: float) -> list:
        forward = [v, capacity, cost, None]
        backward = [u, 0, -cost, forward]
        forward[3] = backward
        self.graph[u].append(forward)
        self.graph[v].append(backward)
        return forward

    def _initial_potentials(self, source: int) -> list[float]:
        # Bellman-Ford over arcs with residual capacity (negative costs allowed).
        dist = [INF] * self.n
        dist[source] = 0.0
        for _ in range(self.n - 1):
            changed = False
            for u in range(self.n):
                du = dist[u]
                if du == INF:
                    continue
                for v, cap, cost, _ in self.graph[u]:
                    if cap > 0 and du + cost < dist[v]:
                        dist[v] = du + cost
                        changed = True
            if not changed:
                break
        return [0.0 if d == INF else d for d in dist]

    def _dijkstra(self, source: int, potential: list[float]):
        dist = [INF] * self.n
        prev: list = [None] * self.n
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = potential[u]
            for edge in self.graph[u]:
                v, cap, cost, _ = edge
                if cap <= 0:
                    continue
                # Clamp rounding noise; reduced costs are >= 0 in exact arithmetic.
                nd = d + max(cost + pu - potential[v], 0.0)
                if nd < dist[v]:
                    dist[v] = nd
                    prev[v] = edge
                    heapq.heappush(heap, (nd, v))
        return dist, prev

    def solve(self, source: int, sink: int, stop_at_nonnegative: bool = False):
        """Push flow along successive cheapest paths.

        With ``stop_at_nonnegative`` the search halts once the cheapest path
        no longer has negative cost (min-cost flow of free value); otherwise
        it runs to maximum flow. Returns ``(flow, cost)``.
        """
        potential = self._initial_potentials(source)
        flow = 0
        total = 0.0
        while True:
            dist, prev = self._dijkstra(source, potential)
            if dist[sink] == INF:
                break
            path_cost = dist[sink] + potential[sink] - potential[source]
            if stop_at_nonnegative and path_cost >= 0:
                break
            for v in range(self.n):
                if dist[v] < INF:
                    potential[v] += dist[v]
            push = INF
            v = sink
            while v != source:
                edge = prev[v]
                push = min(push, edge[1])
                v = edge[3][0]
            v = sink
            while v != source:
                edge = prev[v]
                edge[1] -= push
                edge[3][1] += push
                v = edge[3][0]
            flow += push
            total += push * path_cost
        return flow, total
