"""Downlink rates, harvested power, joint utility and power-splitting search.

A power-splitting receiver sends a fraction alpha of the received signal to
the decoder and 1 - alpha to the harvester. For every (BS, user) pair the
DL SINR has the common shape

    SINR(alpha) = signal * alpha / (decode_noise + spread * alpha)

and the harvested power is (1 - alpha) * harvest_base, so one set of
per-pair coefficients (:class:`PairParameters`) drives both the macro and
the pico rate formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelState, ScenarioConfig, Topology

ALPHA_EPS = 1e-6
ALPHA_TOL = 1e-8

INV_PHI = (math.sqrt(5) - 1) / 2


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if (alpha < 0).any() or (alpha > 1).any() or np.isnan(alpha).any():
        raise ValueError("power-splitting factor must lie in [0, 1]")
    return alpha


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def mbs_dl_rate(alpha, gain, interference, *, antennas, capacity, power,
                user_noise, decode_noise):
    """Massive-MIMO DL rate of a macro-BS user under conjugate precoding.

    ``interference`` is the aggregate large-scale power from the pico BSs,
    sum_j' P_j' l_j',k. The caller multiplies by the association indicator.
    """
    alpha = _check_alpha(alpha)
    prefactor = (antennas - capacity + 1) / capacity
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = prefactor * alpha * power * gain / (
            decode_noise + alpha * user_noise + alpha * interference)
    sinr = np.nan_to_num(sinr, nan=0.0)
    return _scalar(np.log1p(sinr) / np.log(2.0))


def pbs_dl_rate(alpha, own_gain, cross_gains, *, power, user_noise, decode_noise):
    """DL rate of a pico-BS user.

    ``own_gain`` is |h^H h|^2 for the pair, ``cross_gains`` the per-user
    terms of the intra-cell interference sum.
    """
    alpha = _check_alpha(alpha)
    if np.any(np.asarray(own_gain) < 0) or np.any(np.asarray(cross_gains) < 0):
        raise ValueError("gains must be non-negative")
    cross = np.sum(cross_gains, axis=-1) if np.ndim(cross_gains) else cross_gains
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = alpha * power * own_gain / (
            decode_noise + alpha * user_noise + alpha * power * cross)
    sinr = np.nan_to_num(sinr, nan=0.0)
    return _scalar(np.log1p(sinr) / np.log(2.0))


def received_power(alpha, h, power, user_noise):
    """Harvested power (1 - alpha)(P |h^H h|^2 + sigma^2) for one pair."""
    alpha = _check_alpha(alpha)
    h = np.asarray(h)
    gain = np.real(np.vdot(h, h)) ** 2
    return _scalar((1.0 - alpha) * (power * gain + user_noise))


def utility(rp, rate):
    """ln(RP) + ln(R); -inf when either factor is zero."""
    rp = np.asarray(rp, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if (rp < 0).any() or (rate < 0).any():
        raise ValueError("received power and rate must be non-negative")
    with np.errstate(divide="ignore"):
        return _scalar(np.log(rp) + np.log(rate))


@dataclass(frozen=True)
class PairParameters:
    """Per-pair coefficients, each of shape (J, K)."""

    signal: np.ndarray
    spread: np.ndarray
    decode_noise: float
    harvest_base: np.ndarray

    def sinr(self, alpha):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.signal * alpha / (self.decode_noise + self.spread * alpha)
        return np.nan_to_num(out, nan=0.0)

    def rate(self, alpha):
        return np.log1p(self.sinr(alpha)) / np.log(2.0)

    def received_power(self, alpha):
        return (1.0 - alpha) * self.harvest_base

    def utility(self, alpha):
        with np.errstate(divide="ignore"):
            return np.log(self.received_power(alpha)) + np.log(self.rate(alpha))


def cross_terms(composite: np.ndarray, antennas, model: str = "own_norm") -> np.ndarray:
    """Intra-cell interference sums for every (BS, user) pair.

    ``own_norm`` sums |h_j,k'^H h_j,k'|^2 over the other users k' != k;
    ``cross_correlation`` sums |h_j,k^H h_j,k'|^2 instead.
    """
    num_bs, num_users, _ = composite.shape
    out = np.zeros((num_bs, num_users))
    for j in range(num_bs):
        hj = composite[j, :, : antennas[j]]
        if model == "own_norm":
            own = np.sum(np.abs(hj) ** 2, axis=1) ** 2
            out[j] = own.sum() - own
        elif model == "cross_correlation":
            gram = np.abs(hj.conj() @ hj.T) ** 2
            out[j] = gram.sum(axis=1) - np.diag(gram)
        else:
            raise ValueError(f"unknown interference model {model!r}")
    return np.clip(out, 0.0, None)


def pair_parameters(config: ScenarioConfig, topology: Topology,
                    channels: ChannelState) -> PairParameters:
    antennas = config.antennas
    capacity = config.capacity
    power = config.tx_power
    l = topology.large_scale
    norm_sq = channels.ul_eigenvalue ** 2
    own = norm_sq ** 2

    signal = np.empty_like(l)
    spread = np.empty_like(l)
    prefactor = (antennas[0] - capacity[0] + 1) / capacity[0]
    signal[0] = prefactor * power[0] * l[0]
    interference = (power[1:, None] * l[1:]).sum(axis=0)
    spread[0] = config.user_noise + interference
    if config.num_bs > 1:
        cross = cross_terms(channels.composite, antennas, config.interference_model)
        signal[1:] = power[1:, None] * own[1:]
        spread[1:] = config.user_noise + power[1:, None] * cross[1:]
    harvest = power[:, None] * own + config.user_noise
    return PairParameters(signal, spread, config.decode_noise, harvest)


def golden_section_max(f, lo, hi, tol: float = ALPHA_TOL):
    """Maximise a unimodal ``f`` on [lo, hi] by golden-section search.

    ``lo``/``hi`` may be arrays; ``f`` is then evaluated elementwise and all
    searches run in lock step. Returns the midpoint of the final bracket,
    whose width is at most ``tol``.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    width = float(np.max(b - a)) if a.size else 0.0
    if width <= tol:
        return _scalar((a + b) / 2)
    n = int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(n):
        left = fc >= fd  # maximum lies in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + INV_PHI * (b - a))
        c, d = new_c, new_d
        f_new = f(np.where(left, c, d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
    return _scalar((a + b) / 2)


def optimize_alpha(params: PairParameters, eps: float = ALPHA_EPS, tol: float = ALPHA_TOL):
    """Utility-maximising splitting factor for every pair.

    Returns ``(alpha, best)``; pairs with no signal get NaN / -inf.
    """
    shape = np.shape(params.signal)
    lo = np.full(shape, eps)
    hi = np.full(shape, 1.0 - eps)
    alpha = np.asarray(golden_section_max(params.utility, lo, hi, tol), dtype=float)
    best = np.asarray(params.utility(alpha), dtype=float)
    dead = (np.asarray(params.signal) <= 0) | ~np.isfinite(best)
    alpha = np.where(dead, np.nan, alpha)
    best = np.where(dead, -np.inf, best)
    return _scalar(alpha), _scalar(best)
