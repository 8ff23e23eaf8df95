"""Domain types shared across the simulator.

Time is slotted: one epoch is the unit time step, so a transmit power and
the energy it drains over one epoch are numerically identical. All powers
and energies are in the same (linear, dimensionless) unit.

Indexing convention: BS 0 is the macro BS (MBS), BSs 1..J-1 are pico BSs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ASSOCIATION_MODES = ("utility", "max_rate")
UL_POLICIES = ("lyapunov", "max_rate")
INTERFERENCE_MODELS = ("own_norm", "cross_correlation")


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class InvariantViolation(RuntimeError):
    """A simulation state broke one of its hard bounds."""


@dataclass(frozen=True)
class Placement:
    cell_radius: float = 200.0
    # None -> 2/3 of the cell radius
    pbs_ring_radius: Optional[float] = None

    @property
    def ring_radius(self) -> float:
        if self.pbs_ring_radius is None:
            return 2.0 * self.cell_radius / 3.0
        return self.pbs_ring_radius


@dataclass(frozen=True)
class ScenarioConfig:
    """All constants of one scenario.

    Per-BS quantities are given per BS kind (one MBS, J-1 identical PBSs)
    and expanded to length-J arrays by the ``antennas``, ``capacity`` and
    ``tx_power`` properties.
    """

    num_bs: int = 6
    num_users: int = 50
    mbs_antennas: int = 100
    pbs_antennas: int = 4
    mbs_capacity: int = 10
    pbs_capacity: int = 4
    mbs_power: float = 40.0
    pbs_power: float = 10.0
    user_noise: float = 0.2
    bs_noise: float = 0.2
    decode_noise: float = 0.2
    battery_cap: float = 300.0
    initial_battery: float = 0.0
    window: int = 5
    coherence: int = 20
    horizon: int = 200
    placement: Placement = field(default_factory=Placement)
    rng_seed: int = 0
    association_mode: str = "utility"
    ul_policy: str = "lyapunov"
    interference_model: str = "own_norm"
    harvest_every_epoch: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        ints = ("num_bs", "num_users", "mbs_antennas", "pbs_antennas", "mbs_capacity",
                "pbs_capacity", "window", "coherence", "horizon", "rng_seed")
        for name in ints:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(name, f"expected an integer, got {value!r}")
        for name in ("mbs_power", "pbs_power", "user_noise", "bs_noise", "decode_noise",
                     "battery_cap"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(name, f"expected a number, got {value!r}")
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be finite and > 0, got {value!r}")
        if self.num_bs < 1:
            raise ConfigError("num_bs", "must be >= 1")
        if self.num_users < 1:
            raise ConfigError("num_users", "must be >= 1")
        if self.mbs_capacity < 1:
            raise ConfigError("mbs_capacity", "must be >= 1")
        if self.mbs_antennas < self.mbs_capacity:
            raise ConfigError("mbs_antennas", "must be >= mbs_capacity")
        if self.num_bs > 1:
            if self.pbs_antennas < 1:
                raise ConfigError("pbs_antennas", "must be >= 1")
            if self.pbs_capacity < 1:
                raise ConfigError("pbs_capacity", "must be >= 1")
        if isinstance(self.initial_battery, bool) or not isinstance(
                self.initial_battery, (int, float)):
            raise ConfigError("initial_battery", "expected a number")
        if not 0 <= self.initial_battery <= self.battery_cap:
            raise ConfigError("initial_battery", "must lie in [0, battery_cap]")
        if not 1 <= self.window < self.horizon:
            raise ConfigError("window", "must satisfy 1 <= window < horizon")
        if not 1 <= self.coherence <= self.horizon:
            raise ConfigError("coherence", "must satisfy 1 <= coherence <= horizon")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed", "must be >= 0")
        if self.placement.cell_radius <= 0:
            raise ConfigError("placement.cell_radius", "must be > 0")
        if self.placement.ring_radius < 0:
            raise ConfigError("placement.pbs_ring_radius", "must be >= 0")
        if self.association_mode not in ASSOCIATION_MODES:
            raise ConfigError("association_mode", f"must be one of {ASSOCIATION_MODES}")
        if self.ul_policy not in UL_POLICIES:
            raise ConfigError("ul_policy", f"must be one of {UL_POLICIES}")
        if self.interference_model not in INTERFERENCE_MODELS:
            raise ConfigError("interference_model", f"must be one of {INTERFERENCE_MODELS}")
        if not isinstance(self.harvest_every_epoch, bool):
            raise ConfigError("harvest_every_epoch", "expected a boolean")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @property
    def antennas(self) -> np.ndarray:
        return self._per_bs(self.mbs_antennas, self.pbs_antennas).astype(int)

    @property
    def capacity(self) -> np.ndarray:
        return self._per_bs(self.mbs_capacity, self.pbs_capacity).astype(int)

    @property
    def tx_power(self) -> np.ndarray:
        return self._per_bs(self.mbs_power, self.pbs_power).astype(float)

    def _per_bs(self, mbs, pbs) -> np.ndarray:
        values = np.full(self.num_bs, pbs)
        values[0] = mbs
        return values


@dataclass(frozen=True)
class Topology:
    bs_positions: np.ndarray    # (J, 2)
    user_positions: np.ndarray  # (K, 2)
    distances: np.ndarray       # (J, K), meters
    large_scale: np.ndarray     # (J, K), path-loss gain in (0, 1]


@dataclass(frozen=True)
class ChannelState:
    """Block-fading channels for one coherence block.

    ``small_scale`` and ``composite`` have shape (J, K, max_j M_j); entries
    past M_j for BS j are zero, so norms are unaffected by the padding.
    """

    small_scale: np.ndarray
    composite: np.ndarray
    ul_eigenvalue: np.ndarray  # (J, K)
    block_start: int

    def vector(self, j: int, k: int, antennas) -> np.ndarray:
        return self.composite[j, k, : antennas[j]]


@dataclass(frozen=True)
class Association:
    """Outcome of one downlink association event.

    ``assignment`` is the 0/1 matrix x (J, K). ``alpha`` holds the
    power-splitting factor of every pair with a finite score and NaN
    elsewhere. ``utility`` is the joint log utility (nats) at that alpha,
    ``score`` whatever the solver maximised (utility or DL rate), and
    ``dl_rate``/``received_power`` the per-pair DL rate and harvested power
    at that alpha.
    """

    assignment: np.ndarray
    alpha: np.ndarray
    utility: np.ndarray
    score: np.ndarray
    dl_rate: np.ndarray
    received_power: np.ndarray
    mode: str = "utility"

    @property
    def serving_bs(self) -> np.ndarray:
        """Per-user serving BS index, -1 when unassociated."""
        served = self.assignment.any(axis=0)
        return np.where(served, self.assignment.argmax(axis=0), -1)

    @property
    def num_associated(self) -> int:
        return int(self.assignment.sum())

    def user_values(self, matrix: np.ndarray) -> np.ndarray:
        """Pick each user's entry at its serving BS (0 when unassociated)."""
        bs = self.serving_bs
        out = np.zeros(matrix.shape[1])
        served = bs >= 0
        out[served] = matrix[bs[served], np.flatnonzero(served)]
        return out

    @property
    def dl_sum_rate(self) -> float:
        return float(np.sum(self.dl_rate, where=self.assignment.astype(bool)))

    def check(self, capacity) -> None:
        x = self.assignment
        if not np.isin(x, (0, 1)).all():
            raise InvariantViolation("assignment is not binary")
        if (x.sum(axis=0) > 1).any():
            raise InvariantViolation("user associated to more than one BS")
        if (x.sum(axis=1) > np.asarray(capacity)).any():
            raise InvariantViolation("BS capacity exceeded")


@dataclass
class BatteryState:
    level: np.ndarray       # S_k(t)
    cap: float              # C_k
    last_tx_power: np.ndarray

    @classmethod
    def initial(cls, num_users: int, cap: float, level: float = 0.0) -> "BatteryState":
        return cls(np.full(num_users, float(level)), float(cap), np.zeros(num_users))

    def check(self, atol: float = 1e-9) -> None:
        tol = atol * max(self.cap, 1.0)
        if (self.level < -tol).any() or (self.level > self.cap + tol).any():
            raise InvariantViolation("battery level outside [0, C]")


class RateWindow:
    """Ring buffer of the last ``size`` per-user UL rates."""

    def __init__(self, num_users: int, size: int):
        self.size = size
        self._buf = np.zeros((size, num_users))
        self._pos = 0

    def push(self, rates: np.ndarray) -> None:
        self._buf[self._pos] = rates
        self._pos = (self._pos + 1) % self.size

    def sums(self) -> np.ndarray:
        return self._buf.sum(axis=0)

    def copy(self) -> "RateWindow":
        other = RateWindow(self._buf.shape[1], self.size)
        other._buf = self._buf.copy()
        other._pos = self._pos
        return other


@dataclass
class SimLog:
    """Per-epoch record of a run; row i describes epoch i + 1.

    Arrays are (T, K) unless noted. ``winner`` is (T, J) with -1 for a cell
    without a transmitter; ``association_id`` (T,) indexes ``associations``
    and ``association_epochs`` gives the epoch at which each event fired.
    """

    config: ScenarioConfig
    topology: Topology
    battery_start: np.ndarray
    battery_end: np.ndarray
    tx_power: np.ndarray
    ul_rate: np.ndarray
    harvested: np.ndarray
    control: np.ndarray
    window_sum: np.ndarray
    winner: np.ndarray
    association_id: np.ndarray
    associations: list = field(default_factory=list)
    association_epochs: list = field(default_factory=list)
    channels: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def num_epochs(self) -> int:
        return self.battery_end.shape[0]

    @property
    def epochs(self) -> np.ndarray:
        return np.arange(1, self.num_epochs + 1)
