"""Downlink user association.

The assignment LP over x in [0, 1] with per-BS capacities and one BS per
user has a totally unimodular constraint matrix, so solving it as a flow
problem yields a 0/1 optimum directly:

    source --(cap L_j)--> BS j --(cap 1, cost -score)--> user k --(cap 1)--> sink
"""
from __future__ import annotations

import numpy as np

from .dl import ALPHA_EPS, PairParameters, optimize_alpha, pair_parameters
from .flow import MinCostFlow
from .model import Association, ChannelState, ScenarioConfig, Topology


def build_score_matrix(params: PairParameters, mode: str = "utility", eps: float = ALPHA_EPS):
    """Per-pair splitting factor and score for the chosen association mode.

    ``utility`` maximises the joint log utility over alpha; ``max_rate``
    scores each pair by its DL rate at alpha = 1 - eps, the rate-optimal end
    of the search domain. Returns ``(score, alpha)``; infeasible pairs have
    score -inf and alpha NaN.
    """
    if mode == "utility":
        alpha, score = optimize_alpha(params, eps=eps)
        return np.asarray(score, dtype=float), np.asarray(alpha, dtype=float)
    if mode == "max_rate":
        signal = np.asarray(params.signal, dtype=float)
        alpha = np.where(signal > 0, 1.0 - eps, np.nan)
        score = np.where(signal > 0, params.rate(np.nan_to_num(alpha)), -np.inf)
        return score, alpha
    raise ValueError(f"unknown association mode {mode!r}")


def associate(scores, capacity, maximize_cardinality: bool = True) -> np.ndarray:
    """Optimal 0/1 assignment matrix for a (J, K) score matrix.

    Pairs scored -inf are never assigned. By default the solver first
    serves as many users as capacity allows and then maximises the total
    score among those assignments, which is what a sufficiently large
    uniform offset on the finite scores would produce. With
    ``maximize_cardinality=False`` it maximises the plain score sum, so
    users whose best score is negative stay unserved.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise ValueError("score matrix must be two-dimensional")
    num_bs, num_users = scores.shape
    capacity = np.asarray(capacity, dtype=int).ravel()
    if capacity.shape != (num_bs,):
        raise ValueError(f"expected {num_bs} capacities, got {capacity.size}")
    if (capacity < 0).any():
        raise ValueError("capacities must be non-negative")
    if np.isnan(scores).any() or np.isposinf(scores).any():
        raise ValueError("scores must be finite or -inf")

    source, sink = 0, num_bs + num_users + 1
    net = MinCostFlow(num_bs + num_users + 2)
    for j in range(num_bs):
        net.add_edge(source, 1 + j, int(capacity[j]), 0.0)
    arcs = {}
    for j in range(num_bs):
        for k in range(num_users):
            if np.isfinite(scores[j, k]):
                arcs[j, k] = net.add_edge(1 + j, 1 + num_bs + k, 1, -float(scores[j, k]))
    for k in range(num_users):
        net.add_edge(1 + num_bs + k, sink, 1, 0.0)
    net.solve(source, sink, stop_at_nonnegative=not maximize_cardinality)

    x = np.zeros((num_bs, num_users), dtype=int)
    for (j, k), edge in arcs.items():
        if edge[1] == 0:
            x[j, k] = 1
    return x


def run_algorithm1(config: ScenarioConfig, topology: Topology, channels: ChannelState,
                   mode: str | None = None) -> Association:
    """Optimise every pair's splitting factor, then solve the association."""
    mode = mode or config.association_mode
    params = pair_parameters(config, topology, channels)
    score, alpha = build_score_matrix(params, mode)
    x = associate(score, config.capacity)
    a = np.nan_to_num(alpha)
    finite = np.isfinite(score)
    rate = np.where(finite, params.rate(a), 0.0)
    rp = np.where(finite, params.received_power(a), 0.0)
    util = np.where(finite, params.utility(np.where(finite, a, 0.5)), -np.inf)
    result = Association(x, alpha, util, score, rate, rp, mode)
    result.check(config.capacity)
    return result
