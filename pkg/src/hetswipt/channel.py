"""Topology, path loss and block-fading channel generation.

Randomness comes from one master seed split into independent substreams:
one for the topology and one per coherence block, so the horizon length
never perturbs the placement. Draws are laid out user-major so that the
first K users of a larger scenario coincide with a K-user scenario.
"""
from __future__ import annotations

import numpy as np

from .model import ChannelState, ScenarioConfig, Topology

MACRO_EXPONENT = 3.5
PICO_EXPONENT = 4.0
REFERENCE_DISTANCE = 40.0

_TOPOLOGY_STREAM = 0
_CHANNEL_STREAM = 1


def topology_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_TOPOLOGY_STREAM,)))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_CHANNEL_STREAM, block)))


def path_loss(d, bs_kind: str):
    """Large-scale gain 1 / (1 + (d/40)^n); n = 3.5 for the macro BS, 4 for picos."""
    if bs_kind == "macro":
        exponent = MACRO_EXPONENT
    elif bs_kind == "pico":
        exponent = PICO_EXPONENT
    else:
        raise ValueError(f"unknown BS kind {bs_kind!r}")
    d = np.asarray(d, dtype=float)
    if (d < 0).any():
        raise ValueError("distance must be non-negative")
    gain = 1.0 / (1.0 + (d / REFERENCE_DISTANCE) ** exponent)
    return gain if gain.ndim else float(gain)


def bs_positions(config: ScenarioConfig) -> np.ndarray:
    n_pico = config.num_bs - 1
    positions = np.zeros((config.num_bs, 2))
    if n_pico:
        angles = 2 * np.pi * np.arange(n_pico) / n_pico
        ring = config.placement.ring_radius
        positions[1:, 0] = ring * np.cos(angles)
        positions[1:, 1] = ring * np.sin(angles)
    return positions


def generate_topology(config: ScenarioConfig, rng: np.random.Generator | None = None) -> Topology:
    """MBS at the origin, PBSs evenly on a ring, users uniform in the cell disc."""
    if rng is None:
        rng = topology_rng(config.rng_seed)
    bs = bs_positions(config)
    u = rng.random((config.num_users, 2))
    radius = config.placement.cell_radius * np.sqrt(u[:, 0])
    theta = 2 * np.pi * u[:, 1]
    users = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    distances = np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=-1)
    gains = np.empty_like(distances)
    gains[0] = path_loss(distances[0], "macro")
    if config.num_bs > 1:
        gains[1:] = path_loss(distances[1:], "pico")
    return Topology(bs, users, distances, gains)


def ul_channel_eigenvalue(h) -> float:
    """Single non-zero singular value of a vector channel, i.e. its 2-norm."""
    h = np.asarray(h)
    if h.size == 0:
        raise ValueError("channel vector is empty")
    return float(np.linalg.norm(h))


def draw_small_scale(config: ScenarioConfig, topology: Topology,
                     rng: np.random.Generator, block_start: int = 1) -> ChannelState:
    """Draw i.i.d. CN(0, 1) small-scale vectors for every (BS, user) pair."""
    antennas = config.antennas
    m_max = int(antennas.max())
    raw = rng.standard_normal((config.num_users, config.num_bs, m_max, 2))
    g = (raw[..., 0] + 1j * raw[..., 1]) / np.sqrt(2.0)
    g = np.ascontiguousarray(g.transpose(1, 0, 2))
    g *= np.arange(m_max)[None, None, :] < antennas[:, None, None]
    h = g * topology.large_scale[:, :, None]
    eigen = np.linalg.norm(h, axis=-1)
    return ChannelState(g, h, eigen, block_start)
