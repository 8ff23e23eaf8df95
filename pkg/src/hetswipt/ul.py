"""Uplink drift-plus-penalty scheduling with battery queues.

Each epoch every cell lets exactly one associated user transmit. A user's
per-epoch objective is

    rate(P) + V * S * P,    0 <= P <= S

where S is its battery level and V its control weight; the cell picks the
user with the largest optimal objective. The battery queue follows
S' = min(S - P + RP, C).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import InvariantViolation

POWER_RTOL = 1e-8


def ul_rate(eigenvalue, power, noise):
    """log2(1 + lambda^2 P / sigma_j^2)."""
    if np.any(np.asarray(noise) <= 0):
        raise ValueError("BS noise power must be positive")
    if np.any(np.asarray(power) < 0):
        raise ValueError("transmit power must be non-negative")
    out = np.log1p(np.square(eigenvalue) * power / noise) / np.log(2.0)
    return float(out) if np.ndim(out) == 0 else out


def update_battery(level, power, harvested, cap):
    """Next battery level; spending more than the stored energy is an error."""
    level = np.asarray(level, dtype=float)
    power = np.asarray(power, dtype=float)
    if (power < 0).any():
        raise InvariantViolation("negative transmit power")
    if (power > level * (1 + 1e-12)).any():
        raise InvariantViolation("transmit power exceeds battery level")
    out = np.minimum(level - power + harvested, cap)
    return float(out) if out.ndim == 0 else out


def control_parameter(window_sums) -> np.ndarray:
    """V_k = max_k' R~_k' - R~_k over all users."""
    window_sums = np.asarray(window_sums, dtype=float)
    if window_sums.size == 0:
        return window_sums.copy()
    return window_sums.max() - window_sums


def ul_objective(eigenvalue, power, noise, weight, level):
    return ul_rate(eigenvalue, power, noise) + weight * level * power


def _objective(lam_sq, power, noise, weight, level):
    # unchecked form for the inner search loop
    return np.log1p(lam_sq * power / noise) / np.log(2.0) + weight * level * power


def optimal_ul_power(eigenvalue, noise, weight, level):
    """Bounded ternary search of the per-user objective on [0, S].

    The objective never decreases in P, so the result is the battery level;
    the search is kept as an explicit maximisation and the caller asserts
    the boundary property. Works elementwise on arrays. Ties move the
    bracket upwards and the better bracket end is returned.
    """
    lam = np.asarray(eigenvalue, dtype=float)
    v = np.asarray(weight, dtype=float)
    s = np.asarray(level, dtype=float)
    lam, v, s = np.broadcast_arrays(lam, v, s)
    if (v < 0).any() or (s < 0).any():
        raise ValueError("weight and battery level must be non-negative")
    if noise <= 0:
        raise ValueError("BS noise power must be positive")
    lam_sq = lam * lam

    def f(p):
        return _objective(lam_sq, p, noise, v, s)

    lo = np.zeros_like(s)
    hi = s.copy()
    tol = 1e-8 * np.maximum(s, 1.0)
    width = float(np.max(hi / tol)) if s.size else 0.0
    n = int(math.ceil(math.log(width) / math.log(1.5))) if width > 1 else 0
    for _ in range(n):
        third = (hi - lo) / 3.0
        m1 = lo + third
        m2 = hi - third
        up = f(m1) <= f(m2)
        lo = np.where(up, m1, lo)
        hi = np.where(up, hi, m2)
    best = np.where(f(hi) >= f(lo), hi, lo)
    return float(best) if best.ndim == 0 else best


def select_active_user(users, eigenvalue, weight, level, power, noise):
    """User id of the cell's winner among ``users``, or None for an empty cell.

    Ties go to the lowest user index.
    """
    users = np.asarray(users)
    if users.size == 0:
        return None
    obj = ul_objective(np.asarray(eigenvalue)[users], np.asarray(power)[users], noise,
                       np.asarray(weight)[users], np.asarray(level)[users])
    obj = np.atleast_1d(obj)
    return int(users[int(np.argmax(obj))])


@dataclass(frozen=True)
class DriftDiagnostics:
    """Per-epoch drift-plus-penalty quantities; diagnostics only.

    ``drift`` is the plain battery drift sum_k L(S') - L(S) with
    L(S) = S^2 / 2; ``weighted_drift`` weights each user's drift by V_k,
    which is the drift term that enters the DPP value. ``bound_constant``
    is sum_k V_k (RP - P)^2 / 2 and ``bound_constant_unweighted`` the same
    sum without V; ``lower_bound_constant`` is sum_k V_k (RP^2 + P^2) / 2.
    """

    dpp: float
    drift: float
    weighted_drift: float
    bound_constant: float
    bound_constant_unweighted: float
    lower_bound_constant: float
    linear_term: float
    linear_term_unweighted: float
    reward: float

    @property
    def weighted_bound_holds(self) -> bool:
        return self.weighted_drift <= self._slack(self.bound_constant + self.linear_term)

    @property
    def unweighted_bound_holds(self) -> bool:
        return self.drift <= self._slack(self.bound_constant_unweighted
                                         + self.linear_term_unweighted)

    @property
    def mixed_bound_holds(self) -> bool:
        # Plain drift against the V-weighted right-hand side, as literally written.
        return self.drift <= self._slack(self.bound_constant + self.linear_term)

    def _slack(self, rhs: float) -> float:
        return rhs + 1e-9 * max(1.0, abs(rhs), abs(self.drift), abs(self.weighted_drift))


def drift_terms(level, power, harvested, cap) -> np.ndarray:
    """Per-user drift L(S') - L(S), using the clamped branch where it applies."""
    level = np.asarray(level, dtype=float)
    power = np.asarray(power, dtype=float)
    harvested = np.asarray(harvested, dtype=float)
    unclamped = level - power + harvested
    below = 0.5 * (power ** 2 + harvested ** 2 - 2 * harvested * power) \
        + level * (harvested - power)
    clamped = 0.5 * (cap ** 2 - level ** 2)
    return np.where(unclamped <= cap, below, clamped)


def dpp_diagnostics(level, power, harvested, weight, ul_rates, cap) -> DriftDiagnostics:
    level = np.asarray(level, dtype=float)
    power = np.asarray(power, dtype=float)
    harvested = np.asarray(harvested, dtype=float)
    weight = np.asarray(weight, dtype=float)
    delta = drift_terms(level, power, harvested, cap)
    gap = harvested - power
    reward = float(np.sum(ul_rates))
    weighted = float(np.sum(weight * delta))
    return DriftDiagnostics(
        dpp=-reward + weighted,
        drift=float(delta.sum()),
        weighted_drift=weighted,
        bound_constant=float(0.5 * np.sum(weight * gap ** 2)),
        bound_constant_unweighted=float(0.5 * np.sum(gap ** 2)),
        lower_bound_constant=float(0.5 * np.sum(weight * (harvested ** 2 + power ** 2))),
        linear_term=float(np.sum(weight * level * gap)),
        linear_term_unweighted=float(np.sum(level * gap)),
        reward=reward,
    )
