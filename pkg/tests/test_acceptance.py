"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary. Heavy runs (the users-count sweep
and the fairness comparison) are shared through module-scoped fixtures, and
every simulation they perform is fed to the invariant, boundary and drift
checks of criteria 7-9.
"""
import time

import numpy as np
import pytest

from conftest import random_pairs, report
from oracles import count_local_maxima, enumerate_assignments, grid_alpha
from hetswipt import cli, metrics
from hetswipt.assoc import associate, build_score_matrix
from hetswipt.channel import block_rng, draw_small_scale, generate_topology, topology_rng
from hetswipt.dl import PairParameters, optimize_alpha, pair_parameters
from hetswipt.engine import run_simulation
from hetswipt.model import ScenarioConfig

USER_COUNTS = (10, 20, 30, 40, 50)
SEEDS = range(20)
TOL = 1e-9


class RunAudit:
    """Independent re-check of every logged epoch of every acceptance run."""

    def __init__(self):
        self.runs = 0
        self.epochs = 0
        self.violations = []
        self.transmissions = 0
        self.worst_boundary = 0.0
        self.weighted_holds = 0
        self.unweighted_holds = 0
        self.mixed_holds = 0

    def add(self, log):
        cfg = log.config
        cap = cfg.battery_cap
        tol = TOL * max(cap, 1.0)
        s, s1 = log.battery_start, log.battery_end
        p, rp, v = log.tx_power, log.harvested, log.control
        self.runs += 1
        self.epochs += log.num_epochs
        tag = f"seed={cfg.rng_seed} K={cfg.num_users}"

        if (s1 < -tol).any() or (s1 > cap + tol).any() or (s < -tol).any():
            self.violations.append(f"{tag}: battery outside [0, C]")
        if (p > s * (1 + TOL)).any():
            self.violations.append(f"{tag}: P > S")
        for i in range(log.num_epochs):
            winners = log.winner[i][log.winner[i] >= 0]
            if len(set(winners.tolist())) != winners.size:
                self.violations.append(f"{tag} t={i + 1}: user active in two cells")
            if not set(np.flatnonzero(p[i] > 0).tolist()) <= set(winners.tolist()):
                self.violations.append(f"{tag} t={i + 1}: unselected user transmitted")
            assoc = log.associations[log.association_id[i]]
            cells = assoc.serving_bs[winners]
            if (cells != np.flatnonzero(log.winner[i] >= 0)).any():
                self.violations.append(f"{tag} t={i + 1}: winner outside its cell")
        below = s - p + rp <= cap
        if (np.abs((s1 - s) - (rp - p))[below] > tol).any():
            self.violations.append(f"{tag}: conservation S' - S = RP - P broken below cap")

        rows, cells = np.nonzero(log.winner >= 0)
        users = log.winner[rows, cells]
        level = s[rows, users]
        self.transmissions += users.size
        if users.size:
            rel = np.abs(p[rows, users] - level) / level
            self.worst_boundary = max(self.worst_boundary, float(rel.max()))

        # drift of L(S) = S^2 / 2, from the logged states
        delta = 0.5 * (s1 ** 2 - s ** 2)
        gap = rp - p
        b_w = 0.5 * np.sum(v * gap ** 2, axis=1)
        lin_w = np.sum(v * s * gap, axis=1)
        b_u = 0.5 * np.sum(gap ** 2, axis=1)
        lin_u = np.sum(s * gap, axis=1)
        weighted = np.sum(v * delta, axis=1)
        plain = delta.sum(axis=1)
        self.weighted_holds += int(np.sum(weighted <= _slack(b_w + lin_w, weighted)))
        self.unweighted_holds += int(np.sum(plain <= _slack(b_u + lin_u, plain)))
        self.mixed_holds += int(np.sum(plain <= _slack(b_w + lin_w, plain)))


def _slack(rhs, lhs):
    return rhs + TOL * np.maximum(1.0, np.maximum(np.abs(rhs), np.abs(lhs)))


AUDIT = RunAudit()


@pytest.fixture(scope="module")
def sweep_points():
    points = []
    for k in USER_COUNTS:
        for mode in ("utility", "max_rate"):
            for seed in SEEDS:
                cfg = ScenarioConfig(num_users=k, association_mode=mode, rng_seed=seed)
                log = run_simulation(cfg)
                AUDIT.add(log)
                t = metrics.totals(log)
                points.append(metrics.SweepPoint(k, mode, seed, t["total_received_energy"],
                                                 t["sum_rate_dl"]))
    return points


@pytest.fixture(scope="module")
def fairness_runs():
    out = []
    for seed in SEEDS:
        pair = {}
        for policy in ("lyapunov", "max_rate"):
            log = run_simulation(ScenarioConfig(rng_seed=seed, ul_policy=policy))
            AUDIT.add(log)
            pair[policy] = metrics.fairness(log)
        out.append(pair)
    return out


def _random_scores(rng, num_bs, num_users, dead=0.15):
    scores = rng.normal(0.0, 3.0, size=(num_bs, num_users))
    scores[rng.random(scores.shape) < dead] = -np.inf
    return scores


def test_01_association_matches_enumeration():
    rng = np.random.default_rng(101)
    mismatches, broken = 0, 0
    start = time.perf_counter()
    for _ in range(500):
        num_bs = int(rng.integers(1, 4))
        num_users = int(rng.integers(1, 7))
        capacity = rng.integers(1, 3, size=num_bs)
        scores = _random_scores(rng, num_bs, num_users)
        for maximize in (True, False):
            x = associate(scores, capacity, maximize_cardinality=maximize)
            feasible = (np.isin(x, (0, 1)).all() and (x.sum(axis=0) <= 1).all()
                        and (x.sum(axis=1) <= capacity).all()
                        and np.isfinite(scores[x.astype(bool)]).all())
            broken += not feasible
            obj = float(scores[x.astype(bool)].sum())
            card, best = enumerate_assignments(scores, capacity, maximize)
            if abs(obj - best) > TOL * max(1.0, abs(best)) or (maximize and x.sum() != card):
                mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and broken == 0 and elapsed < 10.0
    report("1 association oracle equivalence", ok,
           f"500 instances x 2 modes, {mismatches} objective mismatches, "
           f"{broken} infeasible, {elapsed:.2f} s (limit 10 s)")
    assert ok


def test_02_integrality_at_full_scale():
    cfg = ScenarioConfig()
    rng = np.random.default_rng(202)
    bad = 0
    for i in range(1000):
        if i < 500:
            # scores from generated scenarios, alternating the two criteria
            seed = 10_000 + i
            topo = generate_topology(cfg, topology_rng(seed))
            ch = draw_small_scale(cfg, topo, block_rng(seed, 0))
            mode = "utility" if i % 2 == 0 else "max_rate"
            scores, _ = build_score_matrix(pair_parameters(cfg, topo, ch), mode)
        else:
            scores = _random_scores(rng, cfg.num_bs, cfg.num_users)
        x = associate(scores, cfg.capacity)
        if not (np.isin(x, (0, 1)).all() and (x.sum(axis=0) <= 1).all()
                and (x.sum(axis=1) <= cfg.capacity).all()):
            bad += 1
    report("2 integrality at J=6, K=50", bad == 0,
           f"1000 instances (500 scenario, 500 random), {bad} violations")
    assert bad == 0


def test_03_alpha_optimizer_against_grid():
    pairs = random_pairs(200, seed=303)
    worst_alpha, worst_u, multi = 0.0, 0.0, 0
    for signal, spread, noise, harvest in pairs:
        params = PairParameters(np.array(signal), np.array(spread), noise, np.array(harvest))
        alpha, best = optimize_alpha(params)
        _, u, g_alpha, g_best = grid_alpha(signal, spread, noise, harvest)
        worst_alpha = max(worst_alpha, abs(alpha - g_alpha))
        # the grid value can never beat the true maximum by more than rounding
        worst_u = max(worst_u, abs(best - g_best))
        multi += count_local_maxima(u) != 1
    ok = worst_alpha <= 1e-4 and worst_u <= 1e-8 and multi == 0
    report("3 alpha optimiser vs 1e-6 grid", ok,
           f"200 pairs, max |da| = {worst_alpha:.2e} (<= 1e-4), "
           f"max |dU| = {worst_u:.2e} (<= 1e-8), {multi} multi-peak curves")
    assert ok


def test_04_received_energy_trend(sweep_points):
    verdict = metrics.sweep_verdict(sweep_points, min_fraction=18 / 20)
    wins = verdict["energy_seed_wins"]
    means = [np.mean([p.total_received_energy for p in sweep_points
                      if p.num_users == k and p.mode == "utility"]) for k in USER_COUNTS]
    ok = all(verdict["energy_utility_ge_max_rate"].values()) \
        and verdict["energy_nondecreasing_in_users"]
    report("4 energy: utility >= max-rate, nondecreasing in K", ok,
           "seed wins per K " + ", ".join(f"K={k}: {wins[str(k)]}/20" for k in USER_COUNTS)
           + "; utility means " + ", ".join(f"{m:.4g}" for m in means))
    assert ok


def test_05_dl_sum_rate_trend(sweep_points):
    verdict = metrics.sweep_verdict(sweep_points, min_fraction=18 / 20)
    wins = verdict["sum_rate_seed_wins"]
    ok = all(verdict["sum_rate_max_rate_ge_utility"].values())
    report("5 DL sum-rate: max-rate >= utility", ok,
           "seed wins per K " + ", ".join(f"K={k}: {wins[str(k)]}/20" for k in USER_COUNTS))
    assert ok


def test_06_fairness_trend(fairness_runs):
    jain_wins = sum(r["lyapunov"]["discharge_counts"] > r["max_rate"]["discharge_counts"]
                    for r in fairness_runs)
    min_wins = sum(r["lyapunov"]["min_discharge_count"] >= r["max_rate"]["min_discharge_count"]
                   for r in fairness_runs)
    ly = np.mean([r["lyapunov"]["discharge_counts"] for r in fairness_runs])
    base = np.mean([r["max_rate"]["discharge_counts"] for r in fairness_runs])
    ok = jain_wins >= 18 and min_wins > len(fairness_runs) / 2
    report("6 UL fairness: Lyapunov vs max-rate", ok,
           f"Jain strictly higher in {jain_wins}/20 seeds (need 18), mean Jain "
           f"{ly:.3f} vs {base:.3f}; min discharge count >= baseline in "
           f"{min_wins}/20 seeds (need majority)")
    assert ok


def test_07_battery_invariants(sweep_points, fairness_runs):
    ok = AUDIT.runs > 0 and not AUDIT.violations
    detail = f"{AUDIT.runs} runs, {AUDIT.epochs} epochs, {len(AUDIT.violations)} violations"
    if AUDIT.violations:
        detail += f" (first: {AUDIT.violations[0]})"
    report("7 battery/queue invariants", ok, detail)
    assert ok


def test_08_boundary_power(sweep_points, fairness_runs):
    ok = AUDIT.transmissions > 0 and AUDIT.worst_boundary <= 1e-8
    report("8 searched power equals battery level", ok,
           f"{AUDIT.transmissions} transmissions, max relative |P - S| / S = "
           f"{AUDIT.worst_boundary:.2e} (<= 1e-8)")
    assert ok


def test_09_drift_bound(sweep_points, fairness_runs):
    n = AUDIT.epochs
    ok = n > 0 and AUDIT.weighted_holds == n and AUDIT.unweighted_holds == n
    report("9 drift bound per epoch", ok,
           f"V-weighted drift <= B + sum V S (RP - P) on {AUDIT.weighted_holds}/{n} epochs; "
           f"unweighted form on {AUDIT.unweighted_holds}/{n}; "
           f"informational: plain drift vs V-weighted rhs on {AUDIT.mixed_holds}/{n}")
    assert ok


def test_10_determinism_and_runtime(tmp_path):
    cfg = ScenarioConfig(rng_seed=7)
    a, b = tmp_path / "a", tmp_path / "b"
    start = time.perf_counter()
    cli.cmd_run(cfg, a)
    elapsed = time.perf_counter() - start
    cli.cmd_run(cfg, b)
    names = sorted(p.name for p in a.iterdir())
    same = names == sorted(p.name for p in b.iterdir()) and all(
        (a / n).read_bytes() == (b / n).read_bytes() for n in names)
    ok = same and elapsed < 10.0
    report("10 determinism and runtime", ok,
           f"{len(names)} output files byte-identical: {same}; full-scale run with "
           f"export took {elapsed:.2f} s (limit 10 s)")
    assert ok
