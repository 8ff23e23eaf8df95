"""Summaries of simulation logs and the users-count sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import run_simulation
from .model import ScenarioConfig, SimLog


def totals(log: SimLog) -> dict:
    """Received energy, DL sum-rate (per association event and mean) and UL sum-rate."""
    per_event = [a.dl_sum_rate for a in log.associations]
    return {
        "total_received_energy": float(log.harvested.sum()),
        "sum_rate_dl_per_event": per_event,
        "sum_rate_dl": float(np.mean(per_event)) if per_event else 0.0,
        "sum_rate_ul": float(log.ul_rate.sum()),
    }


def jain_fairness(values):
    """(sum x)^2 / (n sum x^2); None when every value is zero."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0 or (x < 0).any():
        raise ValueError("expected a non-empty, non-negative series")
    top = x.max()
    if top == 0:
        return None
    x = x / top  # avoid under/overflow in the squares
    return float(x.sum() ** 2 / (x.size * np.sum(x * x)))


def discharge_epochs(log: SimLog) -> list[np.ndarray]:
    """Epochs (1-based) in which each user was the selected UL transmitter."""
    chosen = np.zeros((log.num_epochs, log.config.num_users), dtype=bool)
    rows, cells = np.nonzero(log.winner >= 0)
    chosen[rows, log.winner[rows, cells]] = True
    return [np.flatnonzero(chosen[:, k]) + 1 for k in range(log.config.num_users)]


def discharge_stats(log: SimLog) -> list[dict]:
    out = []
    for epochs in discharge_epochs(log):
        interval = float(np.diff(epochs).mean()) if epochs.size > 1 else None
        out.append({"count": int(epochs.size), "mean_interval": interval})
    return out


def ever_associated(log: SimLog) -> np.ndarray:
    mask = np.zeros(log.config.num_users, dtype=bool)
    for a in log.associations:
        mask |= a.serving_bs >= 0
    return mask


def fairness(log: SimLog) -> dict:
    """Jain indices over users that were associated at some point of the run."""
    users = ever_associated(log)
    counts = np.array([s["count"] for s in discharge_stats(log)])[users]
    cumulative = log.ul_rate.sum(axis=0)[users]
    if not users.any():
        return {"discharge_counts": None, "cumulative_ul_rate": None,
                "min_discharge_count": None}
    return {
        "discharge_counts": jain_fairness(counts),
        "cumulative_ul_rate": jain_fairness(cumulative),
        "min_discharge_count": int(counts.min()),
    }


@dataclass(frozen=True)
class SweepPoint:
    num_users: int
    mode: str
    seed: int
    total_received_energy: float
    sum_rate_dl: float


def sweep(template: ScenarioConfig, user_counts, seeds, modes=("utility", "max_rate")):
    """Run every (K, mode, seed) combination; K = 0 contributes zeros."""
    points = []
    for k in user_counts:
        for mode in modes:
            for seed in seeds:
                if k == 0:
                    points.append(SweepPoint(0, mode, seed, 0.0, 0.0))
                    continue
                config = template.replace(num_users=k, association_mode=mode, rng_seed=seed)
                t = totals(run_simulation(config))
                points.append(SweepPoint(k, mode, seed, t["total_received_energy"],
                                         t["sum_rate_dl"]))
    return points


def sweep_series(points) -> list[dict]:
    """Mean and median per (K, mode, metric)."""
    rows = []
    keys = sorted({(p.num_users, p.mode) for p in points})
    for k, mode in keys:
        group = [p for p in points if p.num_users == k and p.mode == mode]
        for metric in ("total_received_energy", "sum_rate_dl"):
            values = np.array([getattr(p, metric) for p in group])
            rows.append({"num_users": k, "mode": mode, "metric": metric,
                         "mean": float(values.mean()), "median": float(np.median(values)),
                         "seeds": len(values)})
    return rows


def _paired(points, k, metric):
    by = {(p.mode, p.seed): getattr(p, metric) for p in points if p.num_users == k}
    seeds = sorted({s for _, s in by})
    return (np.array([by["utility", s] for s in seeds]),
            np.array([by["max_rate", s] for s in seeds]))


def sweep_verdict(points, min_fraction: float = 0.9) -> dict:
    """Ordering checks for the received-energy and DL sum-rate sweeps.

    Per K, utility association must harvest at least as much energy as
    max-rate association, and max-rate association must reach at least the
    utility DL sum-rate, each in ``min_fraction`` of the seeds; the mean
    utility-mode energy must not decrease with K.
    """
    ks = sorted({p.num_users for p in points if p.num_users > 0})
    energy_wins, rate_wins = {}, {}
    for k in ks:
        u, m = _paired(points, k, "total_received_energy")
        energy_wins[k] = int(np.sum(u >= m))
        u, m = _paired(points, k, "sum_rate_dl")
        rate_wins[k] = int(np.sum(m >= u))
    n_seeds = {k: len(_paired(points, k, "sum_rate_dl")[0]) for k in ks}
    means = [np.mean(_paired(points, k, "total_received_energy")[0]) for k in ks]
    return {
        "energy_utility_ge_max_rate": {
            str(k): energy_wins[k] >= min_fraction * n_seeds[k] for k in ks},
        "sum_rate_max_rate_ge_utility": {
            str(k): rate_wins[k] >= min_fraction * n_seeds[k] for k in ks},
        "energy_nondecreasing_in_users": bool(np.all(np.diff(means) >= 0)),
        "energy_seed_wins": {str(k): energy_wins[k] for k in ks},
        "sum_rate_seed_wins": {str(k): rate_wins[k] for k in ks},
    }
