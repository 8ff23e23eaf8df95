"""Slotted simulation loop: periodic re-association plus per-epoch UL scheduling."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import ul
from .assoc import run_algorithm1
from .channel import block_rng, draw_small_scale, generate_topology, topology_rng
from .model import (Association, BatteryState, ChannelState, InvariantViolation, RateWindow,
                    ScenarioConfig, SimLog)


def association_epochs(coherence: int, horizon: int) -> list[int]:
    """Epochs at which the controller re-associates.

    Literal block counter: starting from t0 = 1, fire when t - t0 + 1 equals
    the coherence length or 1, and reset t0 = t on firing.
    """
    fired = []
    t0 = 1
    for t in range(1, horizon + 1):
        elapsed = t - t0 + 1
        if elapsed == coherence or elapsed == 1:
            fired.append(t)
            t0 = t
    return fired


@dataclass
class EpochRecord:
    battery_start: np.ndarray
    battery_end: np.ndarray
    tx_power: np.ndarray
    ul_rate: np.ndarray
    harvested: np.ndarray
    control: np.ndarray
    window_sum: np.ndarray
    winner: np.ndarray
    diagnostics: ul.DriftDiagnostics


@dataclass
class EngineState:
    """Mutable simulation state between epochs.

    The per-user arrays ``serving``, ``eigenvalue`` and ``harvest`` are
    derived from the current association and stay fixed within a block.
    """

    battery: BatteryState
    window: RateWindow
    association: Association
    serving: np.ndarray
    eigenvalue: np.ndarray
    harvest: np.ndarray
    t: int = 0

    @classmethod
    def for_block(cls, association: Association, channels: ChannelState,
                  battery: BatteryState, window: RateWindow, t: int = 0) -> "EngineState":
        serving = association.serving_bs
        eigen = association.user_values(channels.ul_eigenvalue)
        harvest = association.user_values(association.received_power)
        return cls(battery, window, association, serving, eigen, harvest, t)

    def copy(self) -> "EngineState":
        battery = BatteryState(self.battery.level.copy(), self.battery.cap,
                               self.battery.last_tx_power.copy())
        return dataclasses.replace(self, battery=battery, window=self.window.copy())


def run_epoch(state: EngineState, t: int, config: ScenarioConfig,
              harvest_now: bool = True) -> tuple[EngineState, EpochRecord]:
    """Advance one epoch; returns the new state and the epoch record."""
    num_users = config.num_users
    level = state.battery.level
    sums = state.window.sums()
    if config.ul_policy == "lyapunov":
        weight = ul.control_parameter(sums)
    else:
        weight = np.zeros(num_users)

    served = state.serving >= 0
    candidate_power = np.zeros(num_users)
    candidate_power[served] = ul.optimal_ul_power(
        state.eigenvalue[served], config.bs_noise, weight[served], level[served])

    winner = np.full(config.num_bs, -1)
    power = np.zeros(num_users)
    for j in range(config.num_bs):
        users = np.flatnonzero((state.serving == j) & (level > 0))
        k = ul.select_active_user(users, state.eigenvalue, weight, level,
                                  candidate_power, config.bs_noise)
        if k is None:
            continue
        p = candidate_power[k]
        if abs(p - level[k]) > ul.POWER_RTOL * level[k]:
            raise InvariantViolation(
                f"epoch {t}: searched power {p!r} differs from battery level {level[k]!r}")
        winner[j] = k
        power[k] = p

    rates = np.zeros(num_users)
    active = power > 0
    rates[active] = ul.ul_rate(state.eigenvalue[active], power[active], config.bs_noise)
    harvested = np.where(served, state.harvest, 0.0) if harvest_now else np.zeros(num_users)

    new_level = ul.update_battery(level, power, harvested, state.battery.cap)
    diagnostics = ul.dpp_diagnostics(level, power, harvested, weight, rates,
                                     state.battery.cap)

    new = state.copy()
    new.battery.level = np.asarray(new_level, dtype=float)
    new.battery.last_tx_power = power
    new.window.push(rates)
    new.t = t
    record = EpochRecord(level.copy(), new.battery.level.copy(), power, rates, harvested,
                         weight, sums, winner, diagnostics)
    check_epoch(record, state.battery.cap)
    return new, record


def check_epoch(record: EpochRecord, cap: float, rtol: float = 1e-9) -> None:
    s, s_new = record.battery_start, record.battery_end
    p, rp = record.tx_power, record.harvested
    tol = rtol * max(cap, 1.0)
    if (s_new < -tol).any() or (s_new > cap + tol).any():
        raise InvariantViolation("battery level left [0, C]")
    if (p > s * (1 + rtol)).any():
        raise InvariantViolation("transmit power above battery level")
    transmitters = np.flatnonzero(p > 0)
    if not np.isin(transmitters, record.winner).all():
        raise InvariantViolation("a non-selected user transmitted")
    cells = record.winner[record.winner >= 0]
    if len(np.unique(cells)) != len(cells):
        raise InvariantViolation("user selected in more than one cell")
    below = s - p + rp <= cap
    err = np.abs((s_new - s) - (rp - p))[below]
    if err.size and (err > tol).any():
        raise InvariantViolation("battery conservation broken below cap")


def run_simulation(config: ScenarioConfig) -> SimLog:
    config.validate()
    T, K, J = config.horizon, config.num_users, config.num_bs
    topology = generate_topology(config, topology_rng(config.rng_seed))
    fire = set(association_epochs(config.coherence, T))

    arrays = {name: np.zeros((T, K)) for name in
              ("battery_start", "battery_end", "tx_power", "ul_rate", "harvested",
               "control", "window_sum")}
    winner = np.full((T, J), -1)
    association_id = np.zeros(T, dtype=int)
    log = SimLog(config, topology, winner=winner, association_id=association_id, **arrays)

    battery = BatteryState.initial(K, config.battery_cap, config.initial_battery)
    window = RateWindow(K, config.window)
    state = None
    for t in range(1, T + 1):
        if t in fire:
            block = len(log.associations)
            channels = draw_small_scale(config, topology, block_rng(config.rng_seed, block),
                                        block_start=t)
            association = run_algorithm1(config, topology, channels)
            if state is not None:
                battery, window = state.battery, state.window
            state = EngineState.for_block(association, channels, battery, window, t - 1)
            log.associations.append(association)
            log.association_epochs.append(t)
            log.channels.append(channels)
        harvest_now = config.harvest_every_epoch or t in fire
        state, record = run_epoch(state, t, config, harvest_now)
        i = t - 1
        for name in arrays:
            arrays[name][i] = getattr(record, name)
        winner[i] = record.winner
        association_id[i] = len(log.associations) - 1
        log.diagnostics.append(record.diagnostics)
    return log


def replay_epoch(log: SimLog, t: int) -> EpochRecord:
    """Re-run epoch ``t`` from the pre-state reconstructed out of ``log``."""
    config = log.config
    i = t - 1
    block = int(log.association_id[i])
    association = log.associations[block]
    window = RateWindow(config.num_users, config.window)
    for tau in range(max(1, t - config.window), t):
        window.push(log.ul_rate[tau - 1])
    battery = BatteryState(log.battery_start[i].copy(), config.battery_cap,
                           np.zeros(config.num_users))
    state = EngineState.for_block(association, log.channels[block], battery, window, t - 1)
    harvest_now = config.harvest_every_epoch or t in log.association_epochs
    _, record = run_epoch(state, t, config, harvest_now)
    return record
